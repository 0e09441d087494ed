use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PintError, Result};

/// How the marginal means and the distribution family are chosen when
/// sampling candidate initial values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SamplingRule {
    /// Gaussian centred on the previous fine value.
    Rule1,
    /// Gaussian centred on the predictor-corrector value.
    Rule2,
    /// t-copula with uniform marginals, centred on the previous fine value.
    Rule3,
    /// t-copula with uniform marginals, centred on the predictor-corrector value.
    Rule4,
}

impl SamplingRule {
    pub const ALL: [SamplingRule; 4] = [Self::Rule1, Self::Rule2, Self::Rule3, Self::Rule4];

    pub fn centred_on_fine(self) -> bool {
        matches!(self, Self::Rule1 | Self::Rule3)
    }

    pub fn uses_copula(self) -> bool {
        matches!(self, Self::Rule3 | Self::Rule4)
    }

    pub fn number(self) -> u8 {
        match self {
            Self::Rule1 => 1,
            Self::Rule2 => 2,
            Self::Rule3 => 3,
            Self::Rule4 => 4,
        }
    }
}

impl fmt::Display for SamplingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for SamplingRule {
    type Err = PintError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().trim_start_matches("rule") {
            "1" => Ok(Self::Rule1),
            "2" => Ok(Self::Rule2),
            "3" => Ok(Self::Rule3),
            "4" => Ok(Self::Rule4),
            _ => Err(PintError::InvalidConfig(format!(
                "unknown sampling rule `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stopping tolerance ε.
    pub tolerance: f64,
    /// Iteration cap; `None` means `N`.
    pub max_iterations: Option<usize>,
    /// Samples per sub-interval M (including the pinned predictor-corrector value).
    pub n_samples: usize,
    pub sampling_rule: SamplingRule,
    pub use_correlations: bool,
    pub rng_seed: u64,
    /// Execution hint only; results never depend on it.
    pub worker_count: usize,
    /// Compare successive iterates relative to their magnitude instead of absolutely.
    pub relative_tolerance: bool,
    /// Hand processors freed by converged sub-intervals to the remaining ones.
    pub reassign_idle: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: None,
            n_samples: 1,
            sampling_rule: SamplingRule::Rule1,
            use_correlations: true,
            rng_seed: 0,
            worker_count: default_workers(),
            relative_tolerance: false,
            reassign_idle: true,
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl SolverConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(PintError::InvalidConfig(format!(
                "tolerance must be non-negative, got {}",
                self.tolerance
            )));
        }
        if self.n_samples == 0 {
            return Err(PintError::InvalidConfig(
                "number of samples M must be at least 1".into(),
            ));
        }
        if self.max_iterations == Some(0) {
            return Err(PintError::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.worker_count == 0 {
            return Err(PintError::InvalidConfig(
                "worker_count must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn iteration_cap(&self, n_subintervals: usize) -> usize {
        self.max_iterations
            .unwrap_or(n_subintervals)
            .min(n_subintervals)
    }
}
