use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{enumerate_independent_sets, ClassSet, Model};

/// Running totals outside this range trigger a common rescaling of every
/// value computed so far.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScaleGuard {
    pub lower: f64,
    pub upper: f64,
}

impl Default for ScaleGuard {
    fn default() -> Self {
        ScaleGuard {
            lower: 1e-300,
            upper: 1e300,
        }
    }
}

/// Stationary probability `π(A)` that the set of unmatched classes is
/// exactly `A`, for every `A ∈ Ind ∪ {∅}`.
///
/// Sets are kept in non-decreasing cardinality order. Looking up a set
/// outside the family returns 0.
#[derive(Debug, Clone)]
pub struct AggregateDistribution {
    sets: Vec<ClassSet>,
    probs: Vec<f64>,
    index: HashMap<ClassSet, usize>,
}

impl AggregateDistribution {
    pub(crate) fn from_parts(sets: Vec<ClassSet>, probs: Vec<f64>) -> Self {
        let index = sets.iter().enumerate().map(|(p, &s)| (s, p)).collect();
        AggregateDistribution { sets, probs, index }
    }

    pub fn get(&self, set: ClassSet) -> f64 {
        self.index.get(&set).map_or(0.0, |&p| self.probs[p])
    }

    /// `π(∅)`, the inverse of the normalisation constant.
    pub fn empty_probability(&self) -> f64 {
        self.probs[0]
    }

    pub fn sets(&self) -> &[ClassSet] {
        &self.sets
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub(crate) fn index_map(&self) -> &HashMap<ClassSet, usize> {
        &self.index
    }

    pub fn position(&self, set: ClassSet) -> Option<usize> {
        self.index.get(&set).copied()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassSet, f64)> + '_ {
        self.sets.iter().copied().zip(self.probs.iter().copied())
    }

    /// Same distribution expressed on the mirrored model.
    pub fn mirrored(&self) -> AggregateDistribution {
        let mut pairs: Vec<_> = self.iter().map(|(s, p)| (s.mirrored(), p)).collect();
        pairs.sort_by_key(|(s, _)| (s.len(), s.customer_mask(), s.server_mask()));
        let (sets, probs) = pairs.into_iter().unzip();
        Self::from_parts(sets, probs)
    }
}

/// Per-set quantities shared by every recursion over `Ind ∪ {∅}`.
pub(crate) struct Lattice<'a> {
    pub model: &'a Model,
    pub sets: &'a [ClassSet],
    index: &'a HashMap<ClassSet, usize>,
    /// `λ(A ∩ ℐ)`
    pub lambda_in: Vec<f64>,
    /// `μ(A ∩ 𝒦)`
    pub mu_in: Vec<f64>,
    /// `μ(𝒦(A ∩ ℐ))·λ(ℐ(A ∩ 𝒦))`
    pub departure: Vec<f64>,
    pub delta: Vec<f64>,
}

impl<'a> Lattice<'a> {
    pub fn new(
        model: &'a Model,
        sets: &'a [ClassSet],
        index: &'a HashMap<ClassSet, usize>,
    ) -> Result<Self> {
        let arrivals = model.arrivals();
        let graph = model.graph();
        let n = sets.len();
        let mut lattice = Lattice {
            model,
            sets,
            index,
            lambda_in: Vec::with_capacity(n),
            mu_in: Vec::with_capacity(n),
            departure: Vec::with_capacity(n),
            delta: Vec::with_capacity(n),
        };
        for &set in sets {
            let lambda_in = arrivals.lambda_of(set);
            let mu_in = arrivals.mu_of(set);
            let departure = arrivals.mu_of(graph.compatible_servers(set))
                * arrivals.lambda_of(graph.compatible_customers(set));
            let delta = departure - lambda_in * mu_in;
            if !set.is_empty() && delta <= 0.0 {
                return Err(Error::UnstableModel {
                    witness: set,
                    delta,
                });
            }
            lattice.lambda_in.push(lambda_in);
            lattice.mu_in.push(mu_in);
            lattice.departure.push(departure);
            lattice.delta.push(delta);
        }
        Ok(lattice)
    }

    #[inline]
    pub fn lookup(&self, values: &[f64], set: ClassSet) -> f64 {
        self.index.get(&set).map_or(0.0, |&p| values[p])
    }

    /// `μ(A∩𝒦) Σ_i λ_i x(A∖{i}) + λ(A∩ℐ) Σ_k μ_k x(A∖{k}) + Σ_i Σ_k λ_i μ_k x(A∖{i,k})`,
    /// with `i` over `A ∩ ℐ` and `k` over `A ∩ 𝒦`.
    pub fn propagate(&self, pos: usize, values: &[f64]) -> f64 {
        let set = self.sets[pos];
        let lambda = self.model.lambda();
        let mu = self.model.mu();
        let mut by_customer = 0.0;
        let mut by_pair = 0.0;
        for i in set.customers() {
            let without_i = set.without_customer(i);
            by_customer += lambda[i] * self.lookup(values, without_i);
            let mut inner = 0.0;
            for k in set.servers() {
                inner += mu[k] * self.lookup(values, without_i.without_server(k));
            }
            by_pair += lambda[i] * inner;
        }
        let by_server: f64 = set
            .servers()
            .map(|k| mu[k] * self.lookup(values, set.without_server(k)))
            .sum();
        self.mu_in[pos] * by_customer + self.lambda_in[pos] * by_server + by_pair
    }
}

pub(crate) struct Family {
    pub sets: Vec<ClassSet>,
    pub index: HashMap<ClassSet, usize>,
}

impl Family {
    pub fn enumerate(model: &Model, cap: usize) -> Result<Self> {
        let sets = enumerate_independent_sets(model.graph(), cap)?;
        let index = sets.iter().enumerate().map(|(p, &s)| (s, p)).collect();
        Ok(Family { sets, index })
    }
}

/// Computes `π` over `Ind ∪ {∅}` with at most `cap` enumerated sets.
pub fn solve_pi_with_cap(model: &Model, cap: usize) -> Result<AggregateDistribution> {
    let family = Family::enumerate(model, cap)?;
    solve_on(model, family, ScaleGuard::default())
}

pub(crate) fn solve_on(
    model: &Model,
    family: Family,
    guard: ScaleGuard,
) -> Result<AggregateDistribution> {
    let lattice = Lattice::new(model, &family.sets, &family.index)?;
    let mut values = vec![0.0; family.sets.len()];
    values[0] = 1.0;
    let mut total = 1.0;
    for pos in 1..values.len() {
        let value = lattice.propagate(pos, &values) / lattice.delta[pos];
        values[pos] = value;
        total += value;
        if !total.is_finite() {
            return Err(Error::NumericalUnderflow);
        }
        if total > guard.upper || total < guard.lower {
            let scale = total.recip();
            values[..=pos].iter_mut().for_each(|v| *v *= scale);
            total = 1.0;
        }
    }
    let total: f64 = values.iter().sum();
    values.iter_mut().for_each(|v| *v /= total);
    if values
        .iter()
        .any(|&v| v.is_nan() || v <= 0.0 || !v.is_finite())
    {
        return Err(Error::NumericalUnderflow);
    }
    let Family { sets, index } = family;
    Ok(AggregateDistribution {
        sets,
        probs: values,
        index,
    })
}
