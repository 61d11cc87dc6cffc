//! Ground truth for small models, computed from the product-form measure of
//! explicit states `(c, d)` without the set recursion.
//!
//! Two engines share one output type:
//!
//! * [`explicit_aggregates`] lists every state up to a length cap and sums
//!   its weight; it is exponential in the length and only usable for short
//!   caps.
//! * [`truncated_aggregates`] reaches long caps by summing the same weights
//!   grouped by prefix class sets: given the length `n`, the customer and
//!   server halves of a state's weight are independent, so the total weight
//!   of all states with class sets `(C, D)` is `f_n(C)·g_n(D)`, where
//!   `f_n(C)` sums the customer factor over every length-`n` sequence using
//!   exactly the classes `C`. Appending one class `j` to a sequence with set
//!   `C'` gives `f_{n+1}(C) = Σ_{j∈C} λ_j (f_n(C) + f_n(C∖{j})) / μ(𝒦(C))`.
//!
//! Transition types are always read off an explicit state by a naive
//! linear-scan implementation of the matching policy, independent of the
//! simulator's queues.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Bits, ClassSet, CompatibilityGraph, Model};
use crate::transition::{PerTransition, TransitionType};

/// Largest `I + K` the oracle accepts.
pub const ORACLE_MAX_CLASSES: usize = 12;

/// A state of the matching chain: unmatched customer and server classes,
/// oldest first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ExplicitState {
    pub customers: Vec<usize>,
    pub servers: Vec<usize>,
}

impl ExplicitState {
    pub fn new(customers: Vec<usize>, servers: Vec<usize>) -> Self {
        ExplicitState { customers, servers }
    }

    pub fn len(&self) -> usize {
        self.customers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.customers.is_empty() && self.servers.is_empty()
    }

    /// The set of classes present in the state.
    pub fn class_set(&self) -> ClassSet {
        ClassSet::from_indices(self.customers.iter().copied(), self.servers.iter().copied())
    }
}

/// Equal lengths and no compatible pair across the two queues.
pub fn in_state_space(state: &ExplicitState, graph: &CompatibilityGraph) -> bool {
    state.customers.len() == state.servers.len()
        && state
            .customers
            .iter()
            .all(|&i| state.servers.iter().all(|&k| !graph.are_compatible(i, k)))
}

/// Unnormalised stationary weight:
/// `Π_p λ_{c_p}/μ(𝒦({c_1..c_p})) · μ_{d_p}/λ(ℐ({d_1..d_p}))`, 1 for the empty state.
pub fn product_form_weight(state: &ExplicitState, model: &Model) -> f64 {
    let graph = model.graph();
    let arrivals = model.arrivals();
    let mut prefix = ClassSet::EMPTY;
    let mut weight = 1.0;
    for (&i, &k) in state.customers.iter().zip(&state.servers) {
        prefix = prefix.union(ClassSet::from_indices([i], [k]));
        weight *= model.lambda()[i] / arrivals.mu_of(graph.compatible_servers(prefix));
        weight *= model.mu()[k] / arrivals.lambda_of(graph.compatible_customers(prefix));
    }
    weight
}

/// One arrival under first-come-first-matched, by scanning the queues.
pub fn fcfm_step(
    state: &ExplicitState,
    graph: &CompatibilityGraph,
    customer: usize,
    server: usize,
) -> (ExplicitState, TransitionType) {
    let mut next = state.clone();
    let customer_match = next
        .servers
        .iter()
        .position(|&k| graph.are_compatible(customer, k));
    if let Some(q) = customer_match {
        next.servers.remove(q);
    }
    let server_match = next
        .customers
        .iter()
        .position(|&i| graph.are_compatible(i, server));
    if let Some(p) = server_match {
        next.customers.remove(p);
    }
    let transition = match (customer_match, server_match) {
        (Some(_), Some(_)) => TransitionType::MinusMinus,
        (None, Some(_)) => {
            next.customers.push(customer);
            TransitionType::ReplaceKeep
        }
        (Some(_), None) => {
            next.servers.push(server);
            TransitionType::KeepReplace
        }
        (None, None) if graph.are_compatible(customer, server) => TransitionType::KeepKeep,
        (None, None) => {
            next.customers.push(customer);
            next.servers.push(server);
            TransitionType::PlusPlus
        }
    };
    (next, transition)
}

/// Every state of length at most `max_len`, level by level. Each state of
/// length `n + 1` extends one of length `n` by a pair `(i, k)`.
pub fn explicit_states(graph: &CompatibilityGraph, max_len: usize) -> Vec<ExplicitState> {
    let mut all = vec![ExplicitState::default()];
    let mut level = vec![ExplicitState::default()];
    for _ in 0..max_len {
        let mut next_level = Vec::new();
        for state in &level {
            let blocked_servers = state
                .customers
                .iter()
                .fold(0u64, |acc, &i| acc | graph.servers_of(i));
            let blocked_customers = state
                .servers
                .iter()
                .fold(0u64, |acc, &k| acc | graph.customers_of(k));
            for i in 0..graph.customer_count() {
                if blocked_customers & (1 << i) != 0 {
                    continue;
                }
                for k in 0..graph.server_count() {
                    if blocked_servers & (1 << k) != 0 || graph.are_compatible(i, k) {
                        continue;
                    }
                    let mut s = state.clone();
                    s.customers.push(i);
                    s.servers.push(k);
                    next_level.push(s);
                }
            }
        }
        all.extend(next_level.iter().cloned());
        level = next_level;
    }
    all
}

/// Truncated, normalised aggregates of the product-form measure.
#[derive(Debug, Clone)]
pub struct TruncatedAggregates {
    pub max_len: usize,
    /// `π̃(A)` for every set carrying weight.
    pub pi: HashMap<ClassSet, f64>,
    /// `ℓ̃_i(A)` per set, one entry per customer class.
    pub set_means: HashMap<ClassSet, Vec<f64>>,
    /// `L̃_i` per customer class.
    pub class_means: Vec<f64>,
    pub transitions: PerTransition<f64>,
    /// Unnormalised total weight of each length `0..=max_len`.
    pub level_totals: Vec<f64>,
    /// Bound on the probability mass beyond `max_len`, relative to the
    /// truncated total.
    pub tail_bound: f64,
    /// Same for the mass weighted by queue length.
    pub mean_tail_bound: f64,
}

impl TruncatedAggregates {
    pub fn pi(&self, set: ClassSet) -> f64 {
        self.pi.get(&set).copied().unwrap_or(0.0)
    }

    /// Bound on `|L̃_i − L_i|`.
    pub fn mean_error_bound(&self, class: usize) -> f64 {
        self.class_means[class] * self.tail_bound + self.mean_tail_bound
    }
}

fn check_size(graph: &CompatibilityGraph) -> Result<()> {
    if graph.class_count() > ORACLE_MAX_CLASSES {
        return Err(Error::OracleTooLarge {
            limit: ORACLE_MAX_CLASSES,
            got: graph.class_count(),
        });
    }
    Ok(())
}

/// Enumerates every explicit state up to `max_len` and sums weights,
/// counts and transition types state by state. No tail bound is attempted
/// (both bounds are reported as `NaN`).
pub fn explicit_aggregates(model: &Model, max_len: usize) -> Result<TruncatedAggregates> {
    let graph = model.graph();
    check_size(graph)?;
    let customers = graph.customer_count();
    let mut pi: HashMap<ClassSet, f64> = HashMap::new();
    let mut set_means: HashMap<ClassSet, Vec<f64>> = HashMap::new();
    let mut level_totals = vec![0.0; max_len + 1];
    let mut transitions = PerTransition::<f64>::default();
    for state in explicit_states(graph, max_len) {
        debug_assert!(in_state_space(&state, graph));
        let w = product_form_weight(&state, model);
        let set = state.class_set();
        *pi.entry(set).or_default() += w;
        let means = set_means.entry(set).or_insert_with(|| vec![0.0; customers]);
        for &i in &state.customers {
            means[i] += w;
        }
        level_totals[state.len()] += w;
        for (i, &l) in model.lambda().iter().enumerate() {
            for (k, &m) in model.mu().iter().enumerate() {
                let (_, t) = fcfm_step(&state, graph, i, k);
                transitions[t] += l * m * w;
            }
        }
    }
    let total: f64 = level_totals.iter().sum();
    transitions.0.iter_mut().for_each(|p| *p /= total);
    Ok(finish(
        model,
        max_len,
        pi,
        set_means,
        level_totals,
        transitions,
        f64::NAN,
        f64::NAN,
    ))
}

/// Truncated aggregates up to `max_len` through prefix-set summation, with
/// a geometric bound on the neglected tail.
///
/// The tail bound is `T_L · r/(1 − r)` over the truncated total, where `T_n`
/// is the total weight of length `n` and `r` the largest of the last three
/// level-to-level ratios, or their extrapolated limit when they are still
/// increasing. Fails when the level totals stop decaying.
pub fn truncated_aggregates(model: &Model, max_len: usize) -> Result<TruncatedAggregates> {
    if max_len < 3 {
        return Err(Error::Spec(
            "truncated_aggregates needs max_len >= 3".into(),
        ));
    }
    let mut agg = grouped_aggregates(model, max_len)?;
    let level_totals = &agg.level_totals;
    let total: f64 = level_totals.iter().sum();
    let last = level_totals[max_len];
    let (tail_bound, mean_tail_bound) = if last == 0.0 {
        (0.0, 0.0)
    } else {
        let ratios: Vec<f64> = (max_len - 2..=max_len)
            .map(|n| level_totals[n] / level_totals[n - 1])
            .collect();
        // ratios still creeping up: extrapolate their limit (Aitken) so the
        // geometric tail does not undershoot
        let (r0, r1, r2) = (ratios[0], ratios[1], ratios[2]);
        let denom = r2 - 2.0 * r1 + r0;
        let limit = if r2 > r1 && r1 > r0 && denom < 0.0 {
            r2 - (r2 - r1).powi(2) / denom
        } else {
            0.0
        };
        let ratio = ratios.iter().copied().fold(limit, f64::max);
        if last >= level_totals[max_len - 1] || ratio >= 1.0 {
            return Err(Error::TruncationDivergence { max_len, ratio });
        }
        let geometric = ratio / (1.0 - ratio);
        let l = max_len as f64;
        (
            last * geometric / total,
            last * (l * geometric + ratio / (1.0 - ratio).powi(2)) / total,
        )
    };
    agg.tail_bound = tail_bound;
    agg.mean_tail_bound = mean_tail_bound;
    Ok(agg)
}

/// Prefix-set summation without any tail estimate.
fn grouped_aggregates(model: &Model, max_len: usize) -> Result<TruncatedAggregates> {
    let graph = model.graph();
    check_size(graph)?;
    let customers = graph.customer_count();
    let servers = graph.server_count();
    let (lambda, mu) = (model.lambda(), model.mu());
    let arrivals = model.arrivals();

    // μ(𝒦(C)) for every customer subset, λ(ℐ(D)) for every server subset
    let customer_rate: Vec<f64> = (0..1u64 << customers)
        .map(|c| arrivals.mu_of(graph.compatible_servers(ClassSet::from_masks(c, 0))))
        .collect();
    let server_rate: Vec<f64> = (0..1u64 << servers)
        .map(|d| arrivals.lambda_of(graph.compatible_customers(ClassSet::from_masks(0, d))))
        .collect();

    // two-sided independent pairs (C, D)
    let all_servers = graph.all_classes().server_mask();
    let mut pairs = Vec::new();
    for c in 1..1u64 << customers {
        let free = all_servers
            & !graph
                .compatible_servers(ClassSet::from_masks(c, 0))
                .server_mask();
        let mut d = free;
        while d != 0 {
            pairs.push((c, d));
            d = (d - 1) & free;
        }
    }

    let mut f = vec![0.0; 1 << customers];
    let mut g = vec![0.0; 1 << servers];
    // f_count[i][C]: Σ |c|_i · customer factor
    let mut f_count = vec![vec![0.0; 1 << customers]; customers];
    f[0] = 1.0;
    g[0] = 1.0;

    let mut pi: HashMap<ClassSet, f64> = HashMap::new();
    let mut set_means: HashMap<ClassSet, Vec<f64>> = HashMap::new();
    pi.insert(ClassSet::EMPTY, 1.0);
    set_means.insert(ClassSet::EMPTY, vec![0.0; customers]);
    let mut level_totals = vec![1.0];

    for _ in 1..=max_len {
        let next_f = extend(&f, lambda, &customer_rate);
        let next_g = extend(&g, mu, &server_rate);
        let mut next_count = Vec::with_capacity(customers);
        for (i, count) in f_count.iter().enumerate() {
            let mut row = extend(count, lambda, &customer_rate);
            for (c, value) in row.iter_mut().enumerate() {
                let c = c as u64;
                if c & (1 << i) != 0 {
                    let without = c & !(1 << i);
                    *value += lambda[i] * (f[c as usize] + f[without as usize])
                        / customer_rate[c as usize];
                }
            }
            next_count.push(row);
        }
        f = next_f;
        g = next_g;
        f_count = next_count;

        let mut level = 0.0;
        for &(c, d) in &pairs {
            let w = f[c as usize] * g[d as usize];
            if w == 0.0 {
                continue;
            }
            let set = ClassSet::from_masks(c, d);
            *pi.entry(set).or_default() += w;
            let means = set_means.entry(set).or_insert_with(|| vec![0.0; customers]);
            for i in Bits(c) {
                means[i] += f_count[i][c as usize] * g[d as usize];
            }
            level += w;
        }
        level_totals.push(level);
    }

    let total: f64 = level_totals.iter().sum();
    let mut transitions = PerTransition::<f64>::default();
    for (&set, &w) in &pi {
        let representative = representative(set);
        for (i, &l) in lambda.iter().enumerate() {
            for (k, &m) in mu.iter().enumerate() {
                let (_, t) = fcfm_step(&representative, graph, i, k);
                transitions[t] += l * m * w / total;
            }
        }
    }

    Ok(finish(
        model,
        max_len,
        pi,
        set_means,
        level_totals,
        transitions,
        f64::NAN,
        f64::NAN,
    ))
}

/// `x_{n+1}(C) = Σ_{j∈C} p_j (x_n(C) + x_n(C∖{j})) / rate(C)` over all subsets.
fn extend(current: &[f64], probs: &[f64], rate: &[f64]) -> Vec<f64> {
    let mut next = vec![0.0; current.len()];
    for (c, value) in next.iter_mut().enumerate().skip(1) {
        let mut acc = 0.0;
        for j in Bits(c as u64) {
            acc += probs[j] * (current[c] + current[c & !(1 << j)]);
        }
        *value = acc / rate[c];
    }
    next
}

/// A state whose class sets are exactly those of `set`, cycling through
/// the classes of the smaller side.
fn representative(set: ClassSet) -> ExplicitState {
    let customers: Vec<usize> = set.customers().collect();
    let servers: Vec<usize> = set.servers().collect();
    let n = customers.len().max(servers.len());
    if n == 0 {
        return ExplicitState::default();
    }
    ExplicitState {
        customers: customers.iter().copied().cycle().take(n).collect(),
        servers: servers.iter().copied().cycle().take(n).collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    model: &Model,
    max_len: usize,
    mut pi: HashMap<ClassSet, f64>,
    mut set_means: HashMap<ClassSet, Vec<f64>>,
    level_totals: Vec<f64>,
    transitions: PerTransition<f64>,
    tail_bound: f64,
    mean_tail_bound: f64,
) -> TruncatedAggregates {
    let total: f64 = level_totals.iter().sum();
    pi.values_mut().for_each(|p| *p /= total);
    let mut class_means = vec![0.0; model.graph().customer_count()];
    for means in set_means.values_mut() {
        for (i, m) in means.iter_mut().enumerate() {
            *m /= total;
            class_means[i] += *m;
        }
    }
    TruncatedAggregates {
        max_len,
        pi,
        set_means,
        class_means,
        transitions,
        level_totals,
        tail_bound,
        mean_tail_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;
    use crate::sim::QueueState;

    #[test]
    fn weights_of_small_states() {
        let model = presets::n_model(0.5, 0.25);
        assert_eq!(product_form_weight(&ExplicitState::default(), &model), 1.0);
        let one = ExplicitState::new(vec![1], vec![0]);
        assert!((product_form_weight(&one, &model) - 1.0 / 3.0).abs() < 1e-15);
        let two = ExplicitState::new(vec![1, 1], vec![0, 0]);
        assert!((product_form_weight(&two, &model) - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn single_pair_has_only_the_empty_state() {
        let model = presets::single_pair();
        let agg = truncated_aggregates(&model, 10).unwrap();
        assert_eq!(agg.pi.len(), 1);
        assert_eq!(agg.pi(ClassSet::EMPTY), 1.0);
        assert_eq!(agg.class_means, vec![0.0]);
        assert_eq!(agg.tail_bound, 0.0);
        assert_eq!(explicit_states(model.graph(), 5).len(), 1);
    }

    #[test]
    fn n_graph_geometric_series() {
        let model = presets::n_model(0.5, 0.25);
        let agg = truncated_aggregates(&model, 30).unwrap();
        let ratio = agg.pi(ClassSet::from_indices([1], [0])) / agg.pi(ClassSet::EMPTY);
        let expected = (1.0 - 3f64.powi(-30)) / 2.0;
        assert!((ratio - expected).abs() < 5e-15);
        let split = [1.0 / 8.0, 1.0 / 8.0, 1.0 / 24.0, 7.0 / 12.0, 1.0 / 8.0];
        for (got, want) in agg.transitions.0.iter().zip(split) {
            assert!(
                (got - want).abs() <= agg.tail_bound + 1e-14,
                "{got} vs {want}"
            );
        }
        assert!((agg.class_means[1] - 0.5).abs() <= agg.mean_error_bound(1) + 1e-14);
    }

    #[test]
    fn prefix_summation_matches_explicit_enumeration() {
        for model in [presets::path_model(0.3), presets::n_model(0.4, 0.3)] {
            let max_len = 4;
            let explicit = explicit_aggregates(&model, max_len).unwrap();
            let grouped = grouped_aggregates(&model, max_len).unwrap();
            for (n, (a, b)) in explicit
                .level_totals
                .iter()
                .zip(&grouped.level_totals)
                .enumerate()
            {
                assert!((a - b).abs() <= 1e-14 * a.max(1.0), "level {n}: {a} vs {b}");
            }
            assert_eq!(explicit.pi.len(), grouped.pi.len());
            for (set, p) in &explicit.pi {
                assert!((p - grouped.pi(*set)).abs() < 1e-14);
                let (em, gm) = (&explicit.set_means[set], &grouped.set_means[set]);
                for (a, b) in em.iter().zip(gm) {
                    assert!((a - b).abs() < 1e-14);
                }
            }
            for t in TransitionType::ALL {
                assert!((explicit.transitions[t] - grouped.transitions[t]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn generated_states_are_valid_and_monotone() {
        let model = presets::path_model(0.5);
        let states = explicit_states(model.graph(), 3);
        assert!(states.iter().all(|s| in_state_space(s, model.graph())));
        let short = truncated_aggregates(&model, 8).unwrap();
        let long = truncated_aggregates(&model, 16).unwrap();
        let short_total: f64 = short.level_totals.iter().sum();
        let long_total: f64 = long.level_totals.iter().sum();
        for (set, p) in &short.pi {
            // unnormalised masses only grow with the cap
            assert!(p * short_total <= long.pi(*set) * long_total * (1.0 + 1e-14));
        }
        for w in long.level_totals.windows(2).skip(3) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn explicit_step_agrees_with_simulator_step() {
        for model in [presets::path_model(0.5), presets::n_model(0.5, 0.25)] {
            let g = model.graph();
            for state in explicit_states(g, 3) {
                for i in 0..g.customer_count() {
                    for k in 0..g.server_count() {
                        let (next, t) = fcfm_step(&state, g, i, k);
                        let mut queues =
                            QueueState::from_sequences(g, &state.customers, &state.servers);
                        let out = queues.step(g, i, k, state.len() as u64);
                        assert_eq!(t, out.transition);
                        assert_eq!(next.customers, queues.customer_sequence());
                        assert_eq!(next.servers, queues.server_sequence());
                        assert!(in_state_space(&next, g));
                    }
                }
            }
        }
    }

    #[test]
    fn agrees_with_set_recursion_on_path_model() {
        let model = presets::path_model(0.5);
        let agg = truncated_aggregates(&model, 40).unwrap();
        assert!(agg.tail_bound < 1e-6, "tail {}", agg.tail_bound);
        let report = crate::solver::analyze(&model).unwrap();
        let pi = crate::solver::solve_pi(&model).unwrap();
        for (set, p) in pi.iter() {
            assert!((p - agg.pi(set)).abs() <= agg.tail_bound + 1e-13, "{set}");
        }
        for i in 0..4 {
            let err = (agg.class_means[i] - report.customer_mean_unmatched[i]).abs();
            assert!(err <= agg.mean_error_bound(i) + 1e-12);
        }
    }

    #[test]
    fn unstable_model_diverges() {
        let model = presets::n_model(0.3, 0.5);
        assert!(matches!(
            truncated_aggregates(&model, 12),
            Err(Error::TruncationDivergence { .. })
        ));
    }
}
