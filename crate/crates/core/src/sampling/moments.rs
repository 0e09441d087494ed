use nalgebra::DMatrix;

use crate::config::SamplingRule;
use crate::ode::StateVector;

use super::correlation::pearson_correlation;

/// Marginal means, marginal standard deviations and correlation matrix of
/// the distribution sampled at one boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMoments {
    pub mean: StateVector,
    pub std_dev: StateVector,
    pub correlation: DMatrix<f64>,
}

impl SamplingMoments {
    pub fn uncorrelated(mean: StateVector, std_dev: StateVector) -> Self {
        let d = mean.dim();
        Self {
            mean,
            std_dev,
            correlation: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }
}

/// Values from the previous iteration needed to build the distribution at
/// boundary `n` during stochastic iteration `k`.
#[derive(Debug, Clone, Copy)]
pub struct IterationData<'a> {
    /// Iteration being prepared (`k ≥ 2`).
    pub k: usize,
    /// Fine value used in the last correction at `n`, i.e. `ℱ(Uᵏ⁻²ₙ₋₁)`.
    pub fine_prev: &'a StateVector,
    /// `Uᵏ⁻¹ₙ`
    pub predictor_corrector: &'a StateVector,
    /// `𝒢(Uᵏ⁻¹ₙ₋₁)`
    pub coarse_now: &'a StateVector,
    /// Coarse value subtracted in the last correction at `n`, i.e. `𝒢(Uᵏ⁻²ₙ₋₁)`.
    pub coarse_prev: &'a StateVector,
    /// Fine propagations of last iteration's samples at `n − 1`, if any.
    pub prior_propagations: Option<&'a [StateVector]>,
}

pub fn moments_for_rule(
    rule: SamplingRule,
    data: &IterationData<'_>,
    use_correlations: bool,
) -> SamplingMoments {
    let mean = if rule.centred_on_fine() {
        data.fine_prev.clone()
    } else {
        data.predictor_corrector.clone()
    };
    let std_dev = (data.coarse_now - data.coarse_prev).abs();
    let d = mean.dim();
    let correlation = match data.prior_propagations {
        Some(batch) if use_correlations && data.k >= 3 && d > 1 && batch.len() >= 2 => {
            pearson_correlation(batch)
        }
        _ => DMatrix::identity(d, d),
    };
    SamplingMoments {
        mean,
        std_dev,
        correlation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(x: &[f64]) -> StateVector {
        StateVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn rules_differ_only_in_mean() {
        let (f, u, g1, g0) = (
            sv(&[1.0, 2.0]),
            sv(&[1.5, 2.5]),
            sv(&[0.2, -0.1]),
            sv(&[0.1, 0.3]),
        );
        let batch = vec![sv(&[1.0, 2.0]), sv(&[2.0, 3.9]), sv(&[3.0, 6.3])];
        let data = IterationData {
            k: 3,
            fine_prev: &f,
            predictor_corrector: &u,
            coarse_now: &g1,
            coarse_prev: &g0,
            prior_propagations: Some(&batch),
        };
        let m1 = moments_for_rule(SamplingRule::Rule1, &data, true);
        let m2 = moments_for_rule(SamplingRule::Rule2, &data, true);
        let m3 = moments_for_rule(SamplingRule::Rule3, &data, true);
        assert_eq!(m1.mean, f);
        assert_eq!(m2.mean, u);
        assert_eq!(m3.mean, f);
        assert_eq!(m1.std_dev, m2.std_dev);
        assert_eq!(m1.correlation, m2.correlation);
        assert!((m1.std_dev[0] - 0.1).abs() < 1e-15 && (m1.std_dev[1] - 0.4).abs() < 1e-15);
        assert!(m1.correlation[(0, 1)] > 0.99);
    }

    #[test]
    fn identity_at_second_iteration_or_when_disabled() {
        let (f, g) = (sv(&[1.0, 2.0]), sv(&[0.0, 0.0]));
        let batch = vec![sv(&[1.0, 2.0]), sv(&[2.0, 4.0])];
        let mut data = IterationData {
            k: 2,
            fine_prev: &f,
            predictor_corrector: &f,
            coarse_now: &g,
            coarse_prev: &g,
            prior_propagations: Some(&batch),
        };
        for rule in SamplingRule::ALL {
            assert_eq!(
                moments_for_rule(rule, &data, true).correlation,
                DMatrix::identity(2, 2)
            );
        }
        data.k = 5;
        assert_eq!(
            moments_for_rule(SamplingRule::Rule1, &data, false).correlation,
            DMatrix::identity(2, 2)
        );
        assert_ne!(
            moments_for_rule(SamplingRule::Rule1, &data, true).correlation,
            DMatrix::identity(2, 2)
        );
        data.prior_propagations = None;
        assert_eq!(
            moments_for_rule(SamplingRule::Rule1, &data, true).correlation,
            DMatrix::identity(2, 2)
        );
    }

    #[test]
    fn converged_state_has_zero_spread() {
        let (u, g) = (sv(&[0.3]), sv(&[1.7]));
        let data = IterationData {
            k: 4,
            fine_prev: &u,
            predictor_corrector: &u,
            coarse_now: &g,
            coarse_prev: &g,
            prior_propagations: None,
        };
        assert_eq!(
            moments_for_rule(SamplingRule::Rule2, &data, true)
                .std_dev
                .as_slice(),
            &[0.0]
        );
    }
}
