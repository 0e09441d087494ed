//! Multivariate Gaussian and ν = 1 t-copula samplers sharing the same
//! marginal means and standard deviations.

use std::f64::consts::PI;

use crate::config::SamplingRule;
use crate::error::Result;
use crate::ode::StateVector;

use super::correlation::factor_correlation;
use super::moments::SamplingMoments;
use super::rng::RngStream;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// CDF of the t distribution with one degree of freedom (standard Cauchy).
pub fn cauchy_cdf(t: f64) -> f64 {
    0.5 + t.atan() / PI
}

/// `z ~ N(0, R)` into `out`, using the factor `L` of `R`.
fn correlated_normal(
    factor: &nalgebra::DMatrix<f64>,
    rng: &mut RngStream,
    iid: &mut [f64],
    out: &mut [f64],
) {
    rng.fill_standard_normal(iid);
    let d = out.len();
    for i in 0..d {
        out[i] = (0..=i).map(|j| factor[(i, j)] * iid[j]).sum();
    }
}

/// Draws the `M − 1` random candidates from `N(μ, Σ)` with
/// `Σᵢⱼ = Rᵢⱼ σᵢ σⱼ`. The factor used is `diag(σ) L`, a lower-triangular
/// factor of `Σ`, so components with `σᵢ = 0` come out exactly `μᵢ`.
pub fn sample_gaussian(
    moments: &SamplingMoments,
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<Vec<StateVector>> {
    let draws = n_samples.saturating_sub(1);
    let d = moments.dim();
    let factor = factor_correlation(&moments.correlation)?;
    let (mut iid, mut z) = (vec![0.0; d], vec![0.0; d]);
    let mu = moments.mean.as_slice();
    let sigma = moments.std_dev.as_slice();
    Ok((0..draws)
        .map(|_| {
            correlated_normal(&factor, rng, &mut iid, &mut z);
            StateVector::from_raw((0..d).map(|i| mu[i] + sigma[i] * z[i]).collect())
        })
        .collect())
}

/// Draws the `M − 1` random candidates from the ν = 1 t-copula with
/// correlation `R`, each marginal rescaled to the uniform distribution on
/// `[μᵢ − √3σᵢ, μᵢ + √3σᵢ]` (mean `μᵢ`, standard deviation `σᵢ`).
pub fn sample_tcopula(
    moments: &SamplingMoments,
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<Vec<StateVector>> {
    let draws = n_samples.saturating_sub(1);
    let d = moments.dim();
    let factor = factor_correlation(&moments.correlation)?;
    let (mut iid, mut z) = (vec![0.0; d], vec![0.0; d]);
    let mu = moments.mean.as_slice();
    let sigma = moments.std_dev.as_slice();
    Ok((0..draws)
        .map(|_| {
            correlated_normal(&factor, rng, &mut iid, &mut z);
            // χ²₁ as the square of an independent standard normal
            let chi = rng.standard_normal().abs();
            StateVector::from_raw(
                (0..d)
                    .map(|i| {
                        let u = if chi > 0.0 {
                            cauchy_cdf(z[i] / chi)
                        } else {
                            0.5
                        };
                        let half_width = SQRT_3 * sigma[i];
                        let x = 2.0 * half_width * u + mu[i] - half_width;
                        x.clamp(mu[i] - half_width, mu[i] + half_width)
                    })
                    .collect(),
            )
        })
        .collect())
}

/// Dispatches to the family selected by `rule`.
pub fn sample_for_rule(
    rule: SamplingRule,
    moments: &SamplingMoments,
    n_samples: usize,
    rng: &mut RngStream,
) -> Result<Vec<StateVector>> {
    if rule.uses_copula() {
        sample_tcopula(moments, n_samples, rng)
    } else {
        sample_gaussian(moments, n_samples, rng)
    }
}
