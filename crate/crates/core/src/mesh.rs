//! Three-level time discretisation: sub-intervals, coarse steps and fine steps.
//!
//! Step sizes are always derived from integer step counts so that boundary
//! times never accumulate floating-point drift.

use serde::Serialize;

use crate::error::{PintError, Result};
use crate::ode::OdeSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeMesh {
    t0: f64,
    t_end: f64,
    n_subintervals: usize,
    coarse_steps: usize,
    fine_steps: usize,
}

/// Builds the mesh from integer ratios: `δT = ΔT / coarse_steps_per_subinterval`
/// and `δt = δT / fine_steps_per_coarse`.
pub fn make_mesh(
    system: &OdeSystem,
    n_subintervals: usize,
    coarse_steps_per_subinterval: usize,
    fine_steps_per_coarse: usize,
) -> Result<TimeMesh> {
    if fine_steps_per_coarse < 2 {
        return Err(PintError::InvalidMesh(format!(
            "need at least 2 fine steps per coarse step, got {fine_steps_per_coarse}"
        )));
    }
    let fine = coarse_steps_per_subinterval
        .checked_mul(fine_steps_per_coarse)
        .ok_or_else(|| PintError::InvalidMesh("fine step count overflows".into()))?;
    TimeMesh::from_step_counts(system, n_subintervals, coarse_steps_per_subinterval, fine)
}

impl TimeMesh {
    /// Builds the mesh from per-sub-interval step counts. Unlike [`make_mesh`]
    /// the fine step need not divide the coarse step exactly (the Bernoulli
    /// sweep at `δT = 10/60` keeps `δt = 10/2000`), but `δT ≥ 2δt` is required.
    pub fn from_step_counts(
        system: &OdeSystem,
        n_subintervals: usize,
        coarse_steps: usize,
        fine_steps: usize,
    ) -> Result<Self> {
        if n_subintervals == 0 {
            return Err(PintError::InvalidMesh(
                "need at least one sub-interval".into(),
            ));
        }
        if coarse_steps == 0 || fine_steps == 0 {
            return Err(PintError::InvalidMesh(
                "step counts must be positive".into(),
            ));
        }
        if fine_steps < 2 * coarse_steps {
            return Err(PintError::InvalidMesh(format!(
                "fine steps ({fine_steps}) must be at least twice the coarse steps ({coarse_steps})"
            )));
        }
        Ok(Self {
            t0: system.t0(),
            t_end: system.t_end(),
            n_subintervals,
            coarse_steps,
            fine_steps,
        })
    }

    /// Test hook: skips the `δT ≥ 2δt` check so 𝒢 and ℱ can coincide.
    #[cfg(test)]
    pub(crate) fn unchecked(
        system: &OdeSystem,
        n_subintervals: usize,
        coarse_steps: usize,
        fine_steps: usize,
    ) -> Self {
        Self {
            t0: system.t0(),
            t_end: system.t_end(),
            n_subintervals,
            coarse_steps,
            fine_steps,
        }
    }

    pub fn n_subintervals(&self) -> usize {
        self.n_subintervals
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Coarse steps per sub-interval.
    pub fn coarse_steps(&self) -> usize {
        self.coarse_steps
    }

    /// Fine steps per sub-interval.
    pub fn fine_steps(&self) -> usize {
        self.fine_steps
    }

    /// `ΔT`
    pub fn subinterval_length(&self) -> f64 {
        (self.t_end - self.t0) / self.n_subintervals as f64
    }

    /// `δT`
    pub fn coarse_step(&self) -> f64 {
        self.subinterval_length() / self.coarse_steps as f64
    }

    /// `δt`
    pub fn fine_step(&self) -> f64 {
        self.subinterval_length() / self.fine_steps as f64
    }

    /// Boundary time `Tₙ`; `T_N` is `t_end` exactly.
    pub fn boundary(&self, n: usize) -> f64 {
        assert!(n <= self.n_subintervals, "boundary index {n} out of range");
        if n == self.n_subintervals {
            self.t_end
        } else {
            self.t0 + (self.t_end - self.t0) * (n as f64 / self.n_subintervals as f64)
        }
    }

    pub fn boundaries(&self) -> Vec<f64> {
        (0..=self.n_subintervals)
            .map(|n| self.boundary(n))
            .collect()
    }

    /// Total number of fine steps over `[t0, t_end]`.
    pub fn total_fine_steps(&self) -> usize {
        self.n_subintervals * self.fine_steps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::StateVector;

    fn system(t0: f64, t_end: f64) -> OdeSystem {
        OdeSystem::new(
            StateVector::new(vec![1.0]).unwrap(),
            t0,
            t_end,
            |_, _, o| o[0] = 0.0,
        )
        .unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn scalar_reference_mesh() {
        let mesh = make_mesh(&system(0.0, 100.0), 40, 2, 100).unwrap();
        assert!(rel(mesh.coarse_step(), 100.0 / 80.0) < 1e-14);
        assert!(rel(mesh.fine_step(), 100.0 / 8000.0) < 1e-14);
    }

    #[test]
    fn lorenz_reference_mesh() {
        let mesh = make_mesh(&system(0.0, 18.0), 50, 5, 75).unwrap();
        assert!(rel(mesh.coarse_step(), 18.0 / 250.0) < 1e-14);
        assert!(rel(mesh.fine_step(), 18.0 / 18750.0) < 1e-14);
    }

    #[test]
    fn minimal_mesh() {
        let mesh = make_mesh(&system(0.0, 3.0), 1, 1, 2).unwrap();
        assert_eq!(mesh.subinterval_length(), mesh.coarse_step());
        assert_eq!(mesh.coarse_step(), 2.0 * mesh.fine_step());
    }

    #[test]
    fn rejects_zero_counts() {
        let sys = system(0.0, 1.0);
        assert!(make_mesh(&sys, 0, 1, 2).is_err());
        assert!(make_mesh(&sys, 1, 0, 2).is_err());
        assert!(make_mesh(&sys, 1, 1, 0).is_err());
        assert!(make_mesh(&sys, 1, 1, 1).is_err());
        assert!(TimeMesh::from_step_counts(&sys, 1, 3, 5).is_err());
        assert!(TimeMesh::from_step_counts(&sys, 20, 3, 100).is_ok());
    }

    #[test]
    fn boundaries_reach_end_exactly() {
        for &(t0, t_end, n) in &[
            (0.0, 15.3, 25),
            (0.0, 18.0, 50),
            (-1.7, 60.0, 30),
            (0.3, 0.7, 7),
        ] {
            let mesh = make_mesh(&system(t0, t_end), n, 1, 2).unwrap();
            assert_eq!(mesh.boundary(0), t0);
            assert!(rel(mesh.boundary(n), t_end) < 1e-12);
            // the computed formula also lands on t_end without the special case
            let formula = t0 + (t_end - t0) * (n as f64 / n as f64);
            assert!(rel(formula, t_end) < 1e-12);
            let b = mesh.boundaries();
            assert!(b.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
