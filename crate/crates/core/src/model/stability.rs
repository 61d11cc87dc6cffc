use super::classes::ClassSet;
use super::independent::enumerate_independent_sets;
use super::Model;
use crate::error::{Error, Result};

/// Largest side size accepted by the subset-scanning Hall-type checks.
pub const HALL_CHECK_MAX_SIDE: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stability {
    /// Every independent set has a positive margin. `tightest` is the set
    /// with the smallest margin, absent when the graph has no independent
    /// two-sided set.
    Stable { tightest: Option<(ClassSet, f64)> },
    /// `witness` has `delta <= 0`; it is the set with the smallest margin.
    Unstable { witness: ClassSet, delta: f64 },
}

impl Stability {
    pub fn is_stable(&self) -> bool {
        matches!(self, Stability::Stable { .. })
    }

    pub fn min_delta(&self) -> Option<f64> {
        match *self {
            Stability::Stable { tightest } => tightest.map(|(_, d)| d),
            Stability::Unstable { delta, .. } => Some(delta),
        }
    }
}

/// Stability verdict from the sign of `Δ(A)` over every independent set.
pub fn check_stability(model: &Model, cap: usize) -> Result<Stability> {
    let sets = enumerate_independent_sets(model.graph(), cap)?;
    let tightest = sets
        .iter()
        .skip(1)
        .map(|&set| (set, model.delta(set)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    Ok(match tightest {
        Some((witness, delta)) if delta <= 0.0 => Stability::Unstable { witness, delta },
        tightest => Stability::Stable { tightest },
    })
}

/// Customer-side condition: `λ(A) < μ(𝒦(A))` for every non-empty proper
/// subset `A` of the customer classes. Scans all subsets.
pub fn customer_condition_holds(model: &Model) -> Result<bool> {
    let graph = model.graph();
    let n = graph.customer_count();
    if n > HALL_CHECK_MAX_SIDE {
        return Err(Error::CountLimitExceeded {
            cap: 1 << HALL_CHECK_MAX_SIDE,
        });
    }
    let arrivals = model.arrivals();
    let full = (1u64 << n) - 1;
    Ok((1..full).all(|mask| {
        let set = ClassSet::from_masks(mask, 0);
        arrivals.lambda_of(set) < arrivals.mu_of(graph.compatible_servers(set))
    }))
}

/// Server-side condition: `μ(A) < λ(ℐ(A))` for every non-empty proper
/// subset `A` of the server classes.
pub fn server_condition_holds(model: &Model) -> Result<bool> {
    customer_condition_holds(&model.mirrored())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{examples, ArrivalModel, CompatibilityGraph, DEFAULT_SET_CAP};
    use proptest::prelude::*;

    #[test]
    fn single_pair_is_stable() {
        let verdict = check_stability(&examples::single_pair(), DEFAULT_SET_CAP).unwrap();
        assert_eq!(verdict, Stability::Stable { tightest: None });
    }

    #[test]
    fn n_graph_verdicts() {
        let witness = ClassSet::from_indices([1], [0]);
        match check_stability(&examples::n_model(0.5, 0.25), DEFAULT_SET_CAP).unwrap() {
            Stability::Stable {
                tightest: Some((set, d)),
            } => {
                assert_eq!(set, witness);
                assert!((d - 0.25).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        match check_stability(&examples::n_model(0.1, 0.5), DEFAULT_SET_CAP).unwrap() {
            Stability::Unstable { witness: w, delta } => {
                assert_eq!(w, witness);
                assert!((delta + 0.4).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        // Δ = 0 exactly is unstable.
        assert!(
            !check_stability(&examples::n_model(0.5, 0.5), DEFAULT_SET_CAP)
                .unwrap()
                .is_stable()
        );
    }

    fn random_model() -> impl Strategy<Value = Model> {
        (1usize..=6, 1usize..=6)
            .prop_flat_map(|(ci, ck)| {
                (
                    Just(ci),
                    Just(ck),
                    proptest::collection::vec(proptest::bool::weighted(0.4), ci * ck),
                    proptest::collection::vec(0.01f64..1.0, ci),
                    proptest::collection::vec(0.01f64..1.0, ck),
                )
            })
            .prop_filter_map("disconnected", |(ci, ck, bits, lam, mu)| {
                let edges: Vec<_> = (0..ci)
                    .flat_map(|i| (0..ck).map(move |k| (i, k)))
                    .zip(bits)
                    .filter_map(|(e, on)| on.then_some(e))
                    .collect();
                let graph = CompatibilityGraph::new(ci, ck, edges).ok()?;
                let (sl, sm): (f64, f64) = (lam.iter().sum(), mu.iter().sum());
                let arrivals = ArrivalModel::new(
                    lam.iter().map(|x| x / sl).collect(),
                    mu.iter().map(|x| x / sm).collect(),
                )
                .ok()?;
                Model::new(graph, arrivals).ok()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn three_criteria_agree(model in random_model()) {
            let by_delta = check_stability(&model, DEFAULT_SET_CAP).unwrap().is_stable();
            prop_assert_eq!(by_delta, customer_condition_holds(&model).unwrap());
            prop_assert_eq!(by_delta, server_condition_holds(&model).unwrap());
        }
    }
}
