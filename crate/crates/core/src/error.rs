use thiserror::Error;

pub type Result<T> = std::result::Result<T, PintError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PintError {
    /// A state stopped being finite during integration.
    #[error("solution blew up near t = {time}")]
    BlowUp { time: f64 },

    #[error("every sampled propagation at sub-interval {subinterval} blew up")]
    AllSamplesBlewUp { subinterval: usize },

    #[error("invalid state vector: {0}")]
    InvalidState(String),

    #[error("invalid ODE system: {0}")]
    InvalidSystem(String),

    #[error("invalid time mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("correlation matrix could not be factorised after repair: {matrix:?}")]
    Factorization { matrix: Vec<Vec<f64>> },
}
