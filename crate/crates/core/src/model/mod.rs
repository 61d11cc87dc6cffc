//! Bipartite matching model: classes, compatibility graph, arrival
//! probabilities, independent-set enumeration and stability.

mod arrivals;
mod classes;
mod graph;
mod independent;
pub mod presets;
mod stability;

pub use arrivals::{ArrivalModel, SUM_TOLERANCE};
pub use classes::{Bits, ClassId, ClassSet, Side, MAX_CLASSES};
pub use graph::CompatibilityGraph;
pub use independent::{enumerate_independent_sets, DEFAULT_SET_CAP};
pub use stability::{
    check_stability, customer_condition_holds, server_condition_holds, Stability,
    HALL_CHECK_MAX_SIDE,
};

#[cfg(test)]
pub(crate) use presets as examples;

use crate::error::{Error, Result};

/// A compatibility graph together with its arrival probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    graph: CompatibilityGraph,
    arrivals: ArrivalModel,
}

impl Model {
    pub fn new(graph: CompatibilityGraph, arrivals: ArrivalModel) -> Result<Self> {
        if graph.customer_count() != arrivals.lambda().len() {
            return Err(Error::ArrivalLength {
                side: "customer",
                expected: graph.customer_count(),
                got: arrivals.lambda().len(),
            });
        }
        if graph.server_count() != arrivals.mu().len() {
            return Err(Error::ArrivalLength {
                side: "server",
                expected: graph.server_count(),
                got: arrivals.mu().len(),
            });
        }
        Ok(Model { graph, arrivals })
    }

    pub fn graph(&self) -> &CompatibilityGraph {
        &self.graph
    }

    pub fn arrivals(&self) -> &ArrivalModel {
        &self.arrivals
    }

    pub fn lambda(&self) -> &[f64] {
        self.arrivals.lambda()
    }

    pub fn mu(&self) -> &[f64] {
        self.arrivals.mu()
    }

    /// Stability margin of an independent set:
    /// `μ(𝒦(A∩ℐ))·λ(ℐ(A∩𝒦)) − λ(A∩ℐ)·μ(A∩𝒦)`.
    ///
    /// The first product is the probability that an incoming pair can be
    /// matched with items of classes in `A`, the second that the incoming
    /// pair itself has its classes in `A`.
    pub fn delta(&self, set: ClassSet) -> f64 {
        let departure = self.arrivals.mu_of(self.graph.compatible_servers(set))
            * self
                .arrivals
                .lambda_of(self.graph.compatible_customers(set));
        let arrival = self.arrivals.lambda_of(set) * self.arrivals.mu_of(set);
        departure - arrival
    }

    /// The same model seen from the servers' side.
    pub fn mirrored(&self) -> Model {
        Model {
            graph: self.graph.mirrored(),
            arrivals: self.arrivals.mirrored(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_on_small_models() {
        let n = presets::n_model(0.5, 0.25);
        let set = ClassSet::from_indices([1], [0]);
        assert!((n.delta(set) - 0.25).abs() < 1e-15);

        let boundary = presets::n_model(0.5, 0.5);
        assert_eq!(boundary.delta(set), 0.0);

        for rho in [0.1, 0.5, 0.8] {
            let path = presets::path_model(rho);
            // {1, E}: (μ_A + μ_B)·λ_4 − λ_1·μ_E = ρ/8
            let set = ClassSet::from_indices([0], [4]);
            assert!((path.delta(set) - rho / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let g = presets::n_graph();
        let a = ArrivalModel::new(vec![1.0], vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            Model::new(g, a),
            Err(Error::ArrivalLength {
                side: "customer",
                ..
            })
        ));
    }
}
