//! Exact stationary analysis by aggregating states on their set of
//! unmatched classes.
//!
//! Every quantity is obtained by one pass over `Ind ∪ {∅}` in
//! non-decreasing cardinality order, so the values for `A ∖ {i}`,
//! `A ∖ {k}` and `A ∖ {i, k}` are always available when `A` is reached.
//! Server-side means come from the same code run on the mirrored model.

mod distribution;
mod metrics;

pub use distribution::{solve_pi_with_cap, AggregateDistribution};
pub use metrics::{
    mean_unmatched_per_class, mean_unmatched_total, mean_waiting_times,
    transition_type_probabilities, waiting_probabilities, PerClassMeans,
};

use crate::error::Result;
use crate::model::{ClassSet, Model, DEFAULT_SET_CAP};
use crate::transition::PerTransition;
use distribution::Lattice;

/// Below this margin the report carries a near-instability warning; means
/// scale like `1/Δ` and lose relative precision.
pub const NEAR_UNSTABLE_DELTA: f64 = 1e-9;

/// Stationary distribution of the set of unmatched classes.
pub fn solve_pi(model: &Model) -> Result<AggregateDistribution> {
    solve_pi_with_cap(model, DEFAULT_SET_CAP)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceReport {
    /// Number of sets in `Ind ∪ {∅}`.
    pub set_count: usize,
    pub pi_empty: f64,
    pub customer_waiting_prob: Vec<f64>,
    pub server_waiting_prob: Vec<f64>,
    pub customer_mean_unmatched: Vec<f64>,
    pub server_mean_unmatched: Vec<f64>,
    /// Mean number of unmatched customers, all classes.
    pub total_unmatched_customers: f64,
    /// Mean number of unmatched servers, all classes.
    pub total_unmatched_servers: f64,
    /// Mean waiting time in slots.
    pub customer_mean_wait: Vec<f64>,
    pub server_mean_wait: Vec<f64>,
    pub transitions: PerTransition<f64>,
    /// `P(-/-) − P(+/+)`.
    pub balance_residual: f64,
    pub tightest: Option<(ClassSet, f64)>,
    pub near_unstable: bool,
}

impl PerformanceReport {
    /// Arrival-weighted mean of the customer waiting probabilities.
    pub fn customer_average_waiting_prob(&self, model: &Model) -> f64 {
        weighted(model.lambda(), &self.customer_waiting_prob)
    }

    pub fn server_average_waiting_prob(&self, model: &Model) -> f64 {
        weighted(model.mu(), &self.server_waiting_prob)
    }

    /// Mean waiting time over all customers; equals the mean number of
    /// unmatched customers since one customer arrives per slot.
    pub fn customer_average_wait(&self) -> f64 {
        self.total_unmatched_customers
    }

    pub fn server_average_wait(&self) -> f64 {
        self.total_unmatched_servers
    }
}

fn weighted(weights: &[f64], values: &[f64]) -> f64 {
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

/// Customer-side means on one model: per-class totals and the aggregate.
struct SideMeans {
    per_class: Vec<f64>,
    total: f64,
}

fn side_means(model: &Model, pi: &AggregateDistribution) -> Result<SideMeans> {
    let lattice = Lattice::new(model, pi.sets(), pi.index_map())?;
    let per_class = (0..model.graph().customer_count())
        .map(|i| metrics::per_class_on(&lattice, pi.probabilities(), i).total)
        .collect();
    let total = metrics::total_on(&lattice, pi.probabilities()).total;
    Ok(SideMeans { per_class, total })
}

/// Solves the model and derives every stationary metric.
pub fn analyze(model: &Model) -> Result<PerformanceReport> {
    analyze_with_cap(model, DEFAULT_SET_CAP)
}

pub fn analyze_with_cap(model: &Model, cap: usize) -> Result<PerformanceReport> {
    let pi = solve_pi_with_cap(model, cap)?;
    let mirror = model.mirrored();
    let mirror_pi = solve_pi_with_cap(&mirror, cap)?;

    let (customer_waiting_prob, server_waiting_prob) = waiting_probabilities(model, &pi);
    let customers = side_means(model, &pi)?;
    let servers = side_means(&mirror, &mirror_pi)?;
    let transitions = transition_type_probabilities(model, &pi);

    let tightest = pi
        .sets()
        .iter()
        .skip(1)
        .map(|&s| (s, model.delta(s)))
        .min_by(|a, b| a.1.total_cmp(&b.1));

    Ok(PerformanceReport {
        set_count: pi.len(),
        pi_empty: pi.empty_probability(),
        customer_mean_wait: mean_waiting_times(model.lambda(), &customers.per_class),
        server_mean_wait: mean_waiting_times(model.mu(), &servers.per_class),
        customer_waiting_prob,
        server_waiting_prob,
        customer_mean_unmatched: customers.per_class,
        server_mean_unmatched: servers.per_class,
        total_unmatched_customers: customers.total,
        total_unmatched_servers: servers.total,
        balance_residual: transitions.balance_residual(),
        transitions,
        near_unstable: tightest.is_some_and(|(_, d)| d < NEAR_UNSTABLE_DELTA),
        tightest,
    })
}
