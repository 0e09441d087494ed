//! State vectors and ODE system definitions shared by every solver.

use std::fmt;
use std::ops::{Add, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{PintError, Result};

/// Dense solution vector `u ∈ ℝᵈ`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    /// Builds a state, rejecting empty or non-finite input.
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(PintError::InvalidState(
                "state must have at least one component".into(),
            ));
        }
        if let Some(i) = components.iter().position(|x| !x.is_finite()) {
            return Err(PintError::InvalidState(format!(
                "component {i} is not finite"
            )));
        }
        Ok(Self(components))
    }

    /// Wraps components without validation. Integrators use this for
    /// intermediate values whose finiteness they check themselves.
    pub(crate) fn from_raw(components: Vec<f64>) -> Self {
        Self(components)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|x| x * factor).collect())
    }

    /// Component-wise absolute value.
    pub fn abs(&self) -> Self {
        Self(self.0.iter().map(|x| x.abs()).collect())
    }

    /// Infinity norm, used by the stopping criterion.
    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    /// Euclidean norm, used for optimal-sample selection.
    pub fn norm_l2(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn distance_inf(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn distance_l2(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &StateVector {
    type Output = StateVector;
    fn add(self, rhs: &StateVector) -> StateVector {
        debug_assert_eq!(self.dim(), rhs.dim());
        StateVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &StateVector {
    type Output = StateVector;
    fn sub(self, rhs: &StateVector) -> StateVector {
        debug_assert_eq!(self.dim(), rhs.dim());
        StateVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

/// Right-hand side `f(u, t)`, written into the output slice.
pub type RhsFn = dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync;

/// An initial value problem `du/dt = f(u, t)` on `[t0, t_end]`.
#[derive(Clone)]
pub struct OdeSystem {
    dimension: usize,
    rhs: Arc<RhsFn>,
    initial_value: StateVector,
    t0: f64,
    t_end: f64,
}

impl OdeSystem {
    pub fn new<F>(initial_value: StateVector, t0: f64, t_end: f64, rhs: F) -> Result<Self>
    where
        F: Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static,
    {
        if !(t0.is_finite() && t_end.is_finite()) || t_end <= t0 {
            return Err(PintError::InvalidSystem(format!(
                "time interval [{t0}, {t_end}] must be finite with t_end > t0"
            )));
        }
        Ok(Self {
            dimension: initial_value.dim(),
            rhs: Arc::new(rhs),
            initial_value,
            t0,
            t_end,
        })
    }

    /// Same right-hand side and interval, different initial value.
    pub fn with_initial_value(&self, initial_value: StateVector) -> Result<Self> {
        if initial_value.dim() != self.dimension {
            return Err(PintError::InvalidSystem(format!(
                "initial value has dimension {}, system has {}",
                initial_value.dim(),
                self.dimension
            )));
        }
        Ok(Self {
            initial_value,
            ..self.clone()
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn initial_value(&self) -> &StateVector {
        &self.initial_value
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Evaluates `f(u, t)` into `out`.
    #[inline]
    pub fn eval_into(&self, u: &[f64], t: f64, out: &mut [f64]) {
        (self.rhs)(u, t, out)
    }

    pub fn eval(&self, u: &StateVector, t: f64) -> StateVector {
        let mut out = vec![0.0; self.dimension];
        self.eval_into(u.as_slice(), t, &mut out);
        StateVector::from_raw(out)
    }
}

impl fmt::Debug for OdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeSystem")
            .field("dimension", &self.dimension)
            .field("initial_value", &self.initial_value)
            .field("t0", &self.t0)
            .field("t_end", &self.t_end)
            .finish_non_exhaustive()
    }
}
