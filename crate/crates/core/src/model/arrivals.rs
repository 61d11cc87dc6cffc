use super::classes::ClassSet;
use crate::error::{Error, Result};

/// Accepted deviation of each side's probabilities from a unit sum before
/// they are renormalised.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Per-slot class distributions of the incoming customer (`λ`) and the
/// incoming server (`μ`).
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalModel {
    lambda: Vec<f64>,
    mu: Vec<f64>,
}

impl ArrivalModel {
    /// Validates strict positivity and unit sums, then divides each side by
    /// its sum so the stored vectors sum to one up to rounding.
    pub fn new(lambda: Vec<f64>, mu: Vec<f64>) -> Result<Self> {
        Ok(ArrivalModel {
            lambda: normalise(lambda, "customer")?,
            mu: normalise(mu, "server")?,
        })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `λ(A ∩ ℐ)`.
    pub fn lambda_of(&self, set: ClassSet) -> f64 {
        set.customers().map(|i| self.lambda[i]).sum()
    }

    /// `μ(A ∩ 𝒦)`.
    pub fn mu_of(&self, set: ClassSet) -> f64 {
        set.servers().map(|k| self.mu[k]).sum()
    }

    pub fn mirrored(&self) -> ArrivalModel {
        ArrivalModel {
            lambda: self.mu.clone(),
            mu: self.lambda.clone(),
        }
    }
}

fn normalise(mut probs: Vec<f64>, side: &'static str) -> Result<Vec<f64>> {
    for (index, &value) in probs.iter().enumerate() {
        if value.is_nan() || value <= 0.0 || !value.is_finite() {
            return Err(Error::NonPositiveProbability { side, index, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::ProbabilitySum {
            side,
            sum,
            tolerance: SUM_TOLERANCE,
        });
    }
    probs.iter_mut().for_each(|p| *p /= sum);
    Ok(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::examples;

    #[test]
    fn sums_over_sets() {
        let arrivals = examples::path_arrivals(0.5);
        assert_eq!(arrivals.lambda_of(ClassSet::EMPTY), 0.0);
        assert!((arrivals.lambda_of(ClassSet::from_indices(0..4, [])) - 1.0).abs() < 1e-15);
        assert_eq!(arrivals.lambda_of(ClassSet::from_indices([0, 1], [])), 0.5);
        assert_eq!(arrivals.mu_of(ClassSet::from_indices([0, 1], [])), 0.0);
    }

    #[test]
    fn rejects_zero_and_bad_sums() {
        assert!(matches!(
            ArrivalModel::new(vec![1.0, 0.0], vec![1.0]),
            Err(Error::NonPositiveProbability { index: 1, .. })
        ));
        assert!(matches!(
            ArrivalModel::new(vec![0.5, 0.4], vec![1.0]),
            Err(Error::ProbabilitySum { .. })
        ));
        assert!(ArrivalModel::new(vec![f64::NAN, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn renormalises_round_off() {
        let a = ArrivalModel::new(vec![0.1, 0.2, 0.7 + 5e-13], vec![1.0]).unwrap();
        let sum: f64 = a.lambda().iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }
}
