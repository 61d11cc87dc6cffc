//! Small reference instances used throughout the tests and the CLI docs.

use super::{ArrivalModel, CompatibilityGraph, Model};

/// A single customer class compatible with a single server class.
pub fn single_pair() -> Model {
    Model::new(
        CompatibilityGraph::complete(1, 1).expect("valid graph"),
        ArrivalModel::new(vec![1.0], vec![1.0]).expect("valid arrivals"),
    )
    .expect("valid model")
}

/// Customers {1, 2}, servers {A, B}, edges 1–A, 1–B, 2–B.
pub fn n_graph() -> CompatibilityGraph {
    CompatibilityGraph::new(2, 2, [(0, 0), (0, 1), (1, 1)]).expect("valid graph")
}

/// N-graph with `λ_1 = lambda_1`, `λ_2 = 1 − lambda_1`, `μ_A = mu_a`, `μ_B = 1 − mu_a`.
pub fn n_model(lambda_1: f64, mu_a: f64) -> Model {
    Model::new(
        n_graph(),
        ArrivalModel::new(vec![lambda_1, 1.0 - lambda_1], vec![mu_a, 1.0 - mu_a])
            .expect("valid arrivals"),
    )
    .expect("valid model")
}

/// Path 1–A, 1–B, 2–B, 2–C, 3–C, 3–D, 4–D, 4–E between four customer
/// classes and five server classes.
pub fn path_graph() -> CompatibilityGraph {
    CompatibilityGraph::new(
        4,
        5,
        [
            (0, 0),
            (0, 1),
            (1, 1),
            (1, 2),
            (2, 2),
            (2, 3),
            (3, 3),
            (3, 4),
        ],
    )
    .expect("valid graph")
}

pub const PATH_CUSTOMER_NAMES: [&str; 4] = ["1", "2", "3", "4"];
pub const PATH_SERVER_NAMES: [&str; 5] = ["A", "B", "C", "D", "E"];

/// Uniform customers; `μ_A = ρ/4`, `μ_B = μ_C = μ_D = 1/4`, `μ_E = (1 − ρ)/4`.
pub fn path_arrivals(rho: f64) -> ArrivalModel {
    ArrivalModel::new(
        vec![0.25; 4],
        vec![rho / 4.0, 0.25, 0.25, 0.25, (1.0 - rho) / 4.0],
    )
    .expect("rho must lie in (0, 1)")
}

pub fn path_model(rho: f64) -> Model {
    Model::new(path_graph(), path_arrivals(rho)).expect("valid model")
}

/// Relabelling that maps the path model at `ρ` onto the path model at `1 − ρ`:
/// customers `1↔4, 2↔3`, servers `A↔E, B↔D`, `C` fixed.
pub fn path_reflection_customer(i: usize) -> usize {
    3 - i
}

pub fn path_reflection_server(k: usize) -> usize {
    4 - k
}
