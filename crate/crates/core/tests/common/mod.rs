#![allow(dead_code)]

use std::path::PathBuf;

use matchperf::model::{check_stability, ArrivalModel, CompatibilityGraph, Model, DEFAULT_SET_CAP};
use rand::Rng;

/// Random connected graph with `customers × servers` classes; each edge is
/// present with probability `edge_prob`.
pub fn random_graph(
    rng: &mut impl Rng,
    customers: usize,
    servers: usize,
    edge_prob: f64,
) -> CompatibilityGraph {
    loop {
        let edges: Vec<_> = (0..customers)
            .flat_map(|i| (0..servers).map(move |k| (i, k)))
            .filter(|_| rng.gen_bool(edge_prob))
            .collect();
        if let Ok(g) = CompatibilityGraph::new(customers, servers, edges) {
            return g;
        }
    }
}

/// Positive weights drawn uniformly on (0, 1], normalised to sum to 1.
pub fn random_probs(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen::<f64>()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Random instance with `1 ≤ I ≤ max_customers`, `1 ≤ K ≤ max_servers`
/// and `I + K ≤ max_total`; stable or not.
pub fn random_model(
    rng: &mut impl Rng,
    max_customers: usize,
    max_servers: usize,
    max_total: usize,
) -> Model {
    let customers = rng.gen_range(1..=max_customers.min(max_total - 1));
    let servers = rng.gen_range(1..=max_servers.min(max_total - customers));
    let graph = random_graph(rng, customers, servers, 0.5);
    let arrivals =
        ArrivalModel::new(random_probs(rng, customers), random_probs(rng, servers)).unwrap();
    Model::new(graph, arrivals).unwrap()
}

/// Rejection-samples [`random_model`] until the instance is stable.
pub fn random_stable_model(
    rng: &mut impl Rng,
    max_customers: usize,
    max_servers: usize,
    max_total: usize,
) -> Model {
    loop {
        let model = random_model(rng, max_customers, max_servers, max_total);
        if check_stability(&model, DEFAULT_SET_CAP)
            .unwrap()
            .is_stable()
        {
            return model;
        }
    }
}

pub fn spec_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../specs")
        .join(name)
}
