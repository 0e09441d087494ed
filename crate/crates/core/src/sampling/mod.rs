//! Random candidate generation for the stochastic iterations: seeded
//! streams, correlation estimates, per-rule moments and the two sampler
//! families.

mod correlation;
mod distributions;
mod moments;
mod rng;

pub use correlation::{factor_correlation, pearson_correlation};
pub use distributions::{cauchy_cdf, sample_for_rule, sample_gaussian, sample_tcopula};
pub use moments::{moments_for_rule, IterationData, SamplingMoments};
pub use rng::RngStream;

/// Candidates drawn at one boundary together with their fine propagations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub subinterval_index: usize,
    /// `samples[0]` is the current predictor-corrector value.
    pub samples: Vec<crate::ode::StateVector>,
    /// `None` where the fine propagation blew up.
    pub fine_propagations: Vec<Option<crate::ode::StateVector>>,
    pub selected_index: Option<usize>,
}

impl SampleBatch {
    /// Finite fine propagations, in sample order.
    pub fn finite_propagations(&self) -> Vec<crate::ode::StateVector> {
        self.fine_propagations.iter().flatten().cloned().collect()
    }
}
