//! Monte Carlo harness for stochastic parareal: iteration-count
//! distributions, expectation curves, coarse-step sweeps and error bands.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::{PintError, Result};
use crate::integrators::serial_fine_solution;
use crate::parareal::run_parareal;
use crate::pool;
use crate::problems::BenchmarkCase;
use crate::stochastic::run_stochastic_parareal;

/// Empirical distribution of the stochastic iteration count `k_s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KDistribution {
    pub counts: BTreeMap<usize, usize>,
    /// Realizations that blew up or hit the iteration cap.
    pub failures: usize,
    pub n_realizations: usize,
    pub kd_reference: usize,
}

impl KDistribution {
    pub fn probability(&self, k: usize) -> f64 {
        self.counts.get(&k).copied().unwrap_or(0) as f64 / self.n_realizations as f64
    }

    /// `P(k_s < k)`
    pub fn prob_less_than(&self, k: usize) -> f64 {
        self.counts.range(..k).map(|(_, &c)| c).sum::<usize>() as f64 / self.n_realizations as f64
    }

    /// `P(k_s < k_d)`
    pub fn beat_probability(&self) -> f64 {
        self.prob_less_than(self.kd_reference)
    }

    fn completed(&self) -> usize {
        self.counts.values().sum()
    }

    /// `E[k_s]` over completed realizations.
    pub fn expectation(&self) -> f64 {
        let n = self.completed() as f64;
        self.counts
            .iter()
            .map(|(&k, &c)| k as f64 * c as f64)
            .sum::<f64>()
            / n
    }

    /// `sd(k_s) = sqrt(Σ (k − E)² P(k_s = k))` over completed realizations.
    pub fn sd(&self) -> f64 {
        let n = self.completed() as f64;
        let e = self.expectation();
        self.counts
            .iter()
            .map(|(&k, &c)| (k as f64 - e).powi(2) * c as f64 / n)
            .sum::<f64>()
            .sqrt()
    }
}

fn check_realizations(n_realizations: usize) -> Result<()> {
    if n_realizations == 0 {
        return Err(PintError::InvalidConfig(
            "need at least one realization".into(),
        ));
    }
    Ok(())
}

/// Runs `n_realizations` independent stochastic solves with seeds
/// `base_seed, base_seed + 1, …` and tallies their iteration counts.
/// Realizations run concurrently; each solve is single-threaded.
pub fn estimate_k_distribution(
    case: &BenchmarkCase,
    config: &SolverConfig,
    n_realizations: usize,
    base_seed: u64,
) -> Result<KDistribution> {
    check_realizations(n_realizations)?;
    config.validate()?;
    let outcomes: Vec<Option<usize>> = pool::install(config.worker_count, || {
        (0..n_realizations)
            .into_par_iter()
            .map(|i| {
                let cfg = SolverConfig {
                    rng_seed: base_seed.wrapping_add(i as u64),
                    worker_count: 1,
                    ..config.clone()
                };
                match run_stochastic_parareal(&case.system, &case.mesh, &cfg) {
                    Ok(r) if r.converged => Some(r.iterations),
                    _ => None,
                }
            })
            .collect()
    });
    let mut counts = BTreeMap::new();
    let mut failures = 0;
    for outcome in outcomes {
        match outcome {
            Some(k) => *counts.entry(k).or_insert(0) += 1,
            None => failures += 1,
        }
    }
    Ok(KDistribution {
        counts,
        failures,
        n_realizations,
        kd_reference: case.expected_kd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n_samples: usize,
    pub expectation: f64,
    pub sd: f64,
}

/// `E[k_s]` and `sd(k_s)` for each sample count in `sample_counts`.
pub fn expectation_curve(
    case: &BenchmarkCase,
    config: &SolverConfig,
    sample_counts: &[usize],
    n_realizations: usize,
    base_seed: u64,
) -> Result<Vec<CurvePoint>> {
    sample_counts
        .iter()
        .map(|&m| {
            let cfg = SolverConfig {
                n_samples: m,
                ..config.clone()
            };
            let dist = estimate_k_distribution(case, &cfg, n_realizations, base_seed)?;
            Ok(CurvePoint {
                n_samples: m,
                expectation: dist.expectation(),
                sd: dist.sd(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub coarse_steps: usize,
    pub kd: usize,
    pub n_samples: usize,
    pub beat_probability: f64,
}

/// For each coarse-step count, recomputes `k_d` with parareal and then
/// estimates `P(k_s < k_d)` for each sample count.
pub fn coarse_step_sweep(
    case: &BenchmarkCase,
    config: &SolverConfig,
    coarse_steps: &[usize],
    sample_counts: &[usize],
    n_realizations: usize,
    base_seed: u64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &c in coarse_steps {
        let mut variant = case.with_coarse_steps(c)?;
        let det = run_parareal(&variant.system, &variant.mesh, config)?;
        variant.expected_kd = det.iterations;
        for &m in sample_counts {
            let cfg = SolverConfig {
                n_samples: m,
                ..config.clone()
            };
            let dist = estimate_k_distribution(&variant, &cfg, n_realizations, base_seed)?;
            rows.push(SweepRow {
                coarse_steps: c,
                kd: det.iterations,
                n_samples: m,
                beat_probability: dist.beat_probability(),
            });
        }
    }
    Ok(rows)
}

/// Errors against the serial fine solution at every fine time, indexed
/// `[time][component]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorProfile {
    pub times: Vec<f64>,
    /// Mean over realizations of the stochastic absolute error.
    pub mean_abs_error: Vec<Vec<f64>>,
    /// Two standard deviations of the stochastic absolute error.
    pub two_sd: Vec<Vec<f64>>,
    /// Absolute error of one deterministic parareal run.
    pub parareal_error: Vec<Vec<f64>>,
}

impl ErrorProfile {
    fn max_of(field: &[Vec<f64>]) -> f64 {
        field.iter().flatten().copied().fold(0.0, f64::max)
    }

    pub fn max_two_sd(&self) -> f64 {
        Self::max_of(&self.two_sd)
    }

    pub fn max_mean_abs_error(&self) -> f64 {
        Self::max_of(&self.mean_abs_error)
    }

    pub fn max_parareal_error(&self) -> f64 {
        Self::max_of(&self.parareal_error)
    }
}

/// Error statistics of `n_realizations` stochastic solutions against the
/// serial fine solution, together with the parareal error. Any failed
/// realization is an error.
pub fn error_profile(
    case: &BenchmarkCase,
    config: &SolverConfig,
    n_realizations: usize,
    base_seed: u64,
) -> Result<ErrorProfile> {
    check_realizations(n_realizations)?;
    config.validate()?;
    let (_, serial) = serial_fine_solution(&case.system, &case.mesh)?;
    let abs_err = |traj: &crate::integrators::Trajectory| -> Vec<Vec<f64>> {
        traj.states
            .iter()
            .zip(&serial.states)
            .map(|(a, b)| (a - b).abs().into_vec())
            .collect()
    };

    let parareal = run_parareal(&case.system, &case.mesh, config)?;
    let parareal_error = abs_err(&parareal.fine_solution);

    let errors: Vec<Vec<Vec<f64>>> = pool::install(config.worker_count, || {
        (0..n_realizations)
            .into_par_iter()
            .map(|i| {
                let cfg = SolverConfig {
                    rng_seed: base_seed.wrapping_add(i as u64),
                    worker_count: 1,
                    ..config.clone()
                };
                let r = run_stochastic_parareal(&case.system, &case.mesh, &cfg)?;
                if !r.converged {
                    return Err(PintError::InvalidConfig(format!(
                        "realization {i} did not converge within the iteration cap"
                    )));
                }
                Ok(abs_err(&r.fine_solution))
            })
            .collect::<Result<_>>()
    })?;

    let n = n_realizations as f64;
    let d = case.system.dimension();
    let mut mean_abs_error = vec![vec![0.0; d]; serial.len()];
    let mut two_sd = vec![vec![0.0; d]; serial.len()];
    for (t, (mean_row, sd_row)) in mean_abs_error.iter_mut().zip(&mut two_sd).enumerate() {
        for c in 0..d {
            let mean = errors.iter().map(|e| e[t][c]).sum::<f64>() / n;
            let var = errors.iter().map(|e| (e[t][c] - mean).powi(2)).sum::<f64>() / n;
            mean_row[c] = mean;
            sd_row[c] = 2.0 * var.sqrt();
        }
    }
    Ok(ErrorProfile {
        times: serial.times,
        mean_abs_error,
        two_sd,
        parareal_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::bernoulli;

    fn dist(pairs: &[(usize, usize)], failures: usize, kd: usize) -> KDistribution {
        let counts: BTreeMap<_, _> = pairs.iter().copied().collect();
        let n = counts.values().sum::<usize>() + failures;
        KDistribution {
            counts,
            failures,
            n_realizations: n,
            kd_reference: kd,
        }
    }

    #[test]
    fn moments_of_small_distribution() {
        let d = dist(&[(4, 1), (6, 1)], 0, 6);
        assert_eq!(d.expectation(), 5.0);
        assert_eq!(d.sd(), 1.0);
        assert_eq!(d.probability(4), 0.5);
        assert_eq!(d.beat_probability(), 0.5);
        assert_eq!(d.prob_less_than(7), 1.0);
    }

    #[test]
    fn failures_count_against_probabilities() {
        let d = dist(&[(3, 3)], 1, 5);
        assert_eq!(d.beat_probability(), 0.75);
        assert_eq!(d.expectation(), 3.0);
    }

    #[test]
    fn single_sample_is_point_mass() {
        let case = bernoulli();
        let cfg = SolverConfig::with_tolerance(case.tolerance);
        let d = estimate_k_distribution(&case, &cfg, 4, 0).unwrap();
        assert_eq!(d.counts, BTreeMap::from([(case.expected_kd, 4)]));
        assert_eq!(d.sd(), 0.0);
        assert_eq!(d.beat_probability(), 0.0);
    }

    #[test]
    fn zero_realizations_rejected() {
        let case = bernoulli();
        let cfg = SolverConfig::with_tolerance(case.tolerance);
        assert!(estimate_k_distribution(&case, &cfg, 0, 0).is_err());
    }

    #[test]
    fn deterministic_band_is_zero() {
        let case = bernoulli();
        let cfg = SolverConfig::with_tolerance(case.tolerance);
        let p = error_profile(&case, &cfg, 3, 9).unwrap();
        assert_eq!(p.max_two_sd(), 0.0);
        assert_eq!(p.mean_abs_error, p.parareal_error);
        assert_eq!(p.times.len(), case.mesh.total_fine_steps() + 1);
    }
}
