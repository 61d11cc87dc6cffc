use crate::error::Result;
use crate::model::{Bits, Model};
use crate::transition::{PerTransition, TransitionType};

use super::distribution::{AggregateDistribution, Lattice};

/// Probability that an arriving item of each class cannot be matched and
/// joins its queue: `(ω_i for customers, ω_k for servers)`.
pub fn waiting_probabilities(model: &Model, pi: &AggregateDistribution) -> (Vec<f64>, Vec<f64>) {
    let graph = model.graph();
    let (lambda, mu) = (model.lambda(), model.mu());
    let mut customers = vec![0.0; graph.customer_count()];
    let mut servers = vec![0.0; graph.server_count()];
    for (set, p) in pi.iter() {
        let reachable_servers = graph.compatible_servers(set).server_mask();
        let reachable_customers = graph.compatible_customers(set).customer_mask();
        for (i, omega) in customers.iter_mut().enumerate() {
            let adj = graph.servers_of(i);
            if adj & set.server_mask() != 0 {
                continue;
            }
            // the incoming server pairs with i only if no waiting customer claims it
            let rescue: f64 = Bits(adj & !reachable_servers).map(|k| mu[k]).sum();
            *omega += (1.0 - rescue) * p;
        }
        for (k, omega) in servers.iter_mut().enumerate() {
            let adj = graph.customers_of(k);
            if adj & set.customer_mask() != 0 {
                continue;
            }
            let rescue: f64 = Bits(adj & !reachable_customers).map(|i| lambda[i]).sum();
            *omega += (1.0 - rescue) * p;
        }
    }
    (customers, servers)
}

/// Conditional mean mass `ℓ(A)` of unmatched customers over `Ind ∪ {∅}`,
/// aligned with [`AggregateDistribution::sets`], and its total.
#[derive(Debug, Clone, PartialEq)]
pub struct PerClassMeans {
    pub table: Vec<f64>,
    pub total: f64,
}

/// Mean number of unmatched customers of class `class`.
///
/// `ℓ_i(A) = 0` whenever `i ∉ A`; for `A ∈ Ind` containing `i`,
/// `Δ(A)ℓ_i(A) = λ_i μ(A∩𝒦)(π(A) + π(A∖{i})) + λ_i Σ_k μ_k (π(A∖{k}) + π(A∖{i,k}))`
/// plus the same three-term propagation of `ℓ_i` used for `π`, with the
/// customer sums running over `A ∩ ℐ`.
pub fn mean_unmatched_per_class(
    model: &Model,
    pi: &AggregateDistribution,
    class: usize,
) -> Result<PerClassMeans> {
    let lattice = Lattice::new(model, pi.sets(), pi.index_map())?;
    Ok(per_class_on(&lattice, pi.probabilities(), class))
}

pub(crate) fn per_class_on(lattice: &Lattice<'_>, probs: &[f64], class: usize) -> PerClassMeans {
    let model = lattice.model;
    let sets = lattice.sets;
    let lambda_i = model.lambda()[class];
    let mu = model.mu();
    let mut table = vec![0.0; sets.len()];
    for pos in 1..sets.len() {
        let set = sets[pos];
        if !set.contains_customer(class) {
            continue;
        }
        let without_i = set.without_customer(class);
        let mut source = lattice.mu_in[pos] * (probs[pos] + lattice.lookup(probs, without_i));
        for k in set.servers() {
            source += mu[k]
                * (lattice.lookup(probs, set.without_server(k))
                    + lattice.lookup(probs, without_i.without_server(k)));
        }
        table[pos] = (lambda_i * source + lattice.propagate(pos, &table)) / lattice.delta[pos];
    }
    let total = table.iter().sum();
    PerClassMeans { table, total }
}

/// Mean number of unmatched customers, all classes together:
/// `Δ(A)ℓ(A) = μ(𝒦(A∩ℐ))λ(ℐ(A∩𝒦))π(A)` plus the propagation of `ℓ`.
pub fn mean_unmatched_total(model: &Model, pi: &AggregateDistribution) -> Result<PerClassMeans> {
    let lattice = Lattice::new(model, pi.sets(), pi.index_map())?;
    Ok(total_on(&lattice, pi.probabilities()))
}

pub(crate) fn total_on(lattice: &Lattice<'_>, probs: &[f64]) -> PerClassMeans {
    let mut table = vec![0.0; lattice.sets.len()];
    for pos in 1..table.len() {
        table[pos] = (lattice.departure[pos] * probs[pos] + lattice.propagate(pos, &table))
            / lattice.delta[pos];
    }
    let total = table.iter().sum();
    PerClassMeans { table, total }
}

/// Little's law: `W = L / rate`, class by class, in slots.
pub fn mean_waiting_times(rates: &[f64], means: &[f64]) -> Vec<f64> {
    rates.iter().zip(means).map(|(r, l)| l / r).collect()
}

/// Probability of each transition type for a stationary arrival.
///
/// Given the set `A` of waiting classes and an arrival `(i, k)`: the
/// customer finds a partner iff `i ∈ ℐ(A∩𝒦)`, the server iff
/// `k ∈ 𝒦(A∩ℐ)`; when neither does, compatibility of `i` and `k` decides
/// between `=/=` and `+/+`.
pub fn transition_type_probabilities(
    model: &Model,
    pi: &AggregateDistribution,
) -> PerTransition<f64> {
    let graph = model.graph();
    let arrivals = model.arrivals();
    let (lambda, mu) = (model.lambda(), model.mu());
    let mut out = PerTransition::<f64>::default();
    for (set, p) in pi.iter() {
        let served = graph.compatible_servers(set);
        let fed = graph.compatible_customers(set);
        // probability the incoming customer / server finds a waiting partner
        let customer_finds = arrivals.lambda_of(fed);
        let server_finds = arrivals.mu_of(served);
        out[TransitionType::MinusMinus] += customer_finds * server_finds * p;
        out[TransitionType::KeepReplace] += customer_finds * (1.0 - server_finds) * p;
        out[TransitionType::ReplaceKeep] += (1.0 - customer_finds) * server_finds * p;
        let mut compatible = 0.0;
        for i in Bits(!fed.customer_mask() & graph.all_classes().customer_mask()) {
            let partners: f64 = Bits(graph.servers_of(i) & !served.server_mask())
                .map(|k| mu[k])
                .sum();
            compatible += lambda[i] * partners;
        }
        let neither = (1.0 - customer_finds) * (1.0 - server_finds);
        out[TransitionType::KeepKeep] += compatible * p;
        out[TransitionType::PlusPlus] += (neither - compatible) * p;
    }
    out
}
