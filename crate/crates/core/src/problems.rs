//! The benchmark systems with their reference meshes and tolerances.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{PintError, Result};
use crate::mesh::{make_mesh, TimeMesh};
use crate::ode::{OdeSystem, StateVector};

pub type AnalyticSolution = Arc<dyn Fn(f64) -> StateVector + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemName {
    Scalar,
    Bernoulli,
    Brusselator,
    Square,
    Lorenz,
}

impl ProblemName {
    pub const ALL: [ProblemName; 5] = [
        Self::Scalar,
        Self::Bernoulli,
        Self::Brusselator,
        Self::Square,
        Self::Lorenz,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Scalar => "scalar",
            Self::Bernoulli => "bernoulli",
            Self::Brusselator => "brusselator",
            Self::Square => "square",
            Self::Lorenz => "lorenz",
        }
    }

    pub fn case(self) -> BenchmarkCase {
        match self {
            Self::Scalar => scalar_nonlinear(),
            Self::Bernoulli => bernoulli(),
            Self::Brusselator => brusselator(),
            Self::Square => square_limit_cycle(),
            Self::Lorenz => lorenz(),
        }
    }
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemName {
    type Err = PintError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| PintError::InvalidConfig(format!("unknown problem `{s}`")))
    }
}

/// A system together with the discretisation, tolerance and deterministic
/// iteration count it is benchmarked at.
#[derive(Clone)]
pub struct BenchmarkCase {
    pub name: ProblemName,
    pub system: OdeSystem,
    pub mesh: TimeMesh,
    pub tolerance: f64,
    pub expected_kd: usize,
    pub analytic_solution: Option<AnalyticSolution>,
}

impl BenchmarkCase {
    /// Same case with a different number of coarse steps per sub-interval,
    /// keeping the fine step.
    pub fn with_coarse_steps(&self, coarse_steps_per_subinterval: usize) -> Result<Self> {
        let mesh = TimeMesh::from_step_counts(
            &self.system,
            self.mesh.n_subintervals(),
            coarse_steps_per_subinterval,
            self.mesh.fine_steps(),
        )?;
        Ok(Self {
            mesh,
            ..self.clone()
        })
    }
}

impl fmt::Debug for BenchmarkCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchmarkCase")
            .field("name", &self.name)
            .field("system", &self.system)
            .field("mesh", &self.mesh)
            .field("tolerance", &self.tolerance)
            .field("expected_kd", &self.expected_kd)
            .field("analytic_solution", &self.analytic_solution.is_some())
            .finish()
    }
}

fn state(x: &[f64]) -> StateVector {
    StateVector::new(x.to_vec()).expect("constant initial values are finite")
}

/// `u' = sin(u)cos(u) − 2u + e^{−t/100} sin(5t) + ln(1+t) cos(t)`, `u(0) = 1` on `[0, 100]`.
pub fn scalar_nonlinear() -> BenchmarkCase {
    let system = OdeSystem::new(state(&[1.0]), 0.0, 100.0, |u, t, out| {
        let x = u[0];
        out[0] = x.sin() * x.cos() - 2.0 * x
            + (-t / 100.0).exp() * (5.0 * t).sin()
            + (1.0 + t).ln() * t.cos();
    })
    .expect("valid system");
    BenchmarkCase {
        name: ProblemName::Scalar,
        mesh: make_mesh(&system, 40, 2, 100).expect("valid mesh"),
        system,
        tolerance: 1e-10,
        expected_kd: 25,
        analytic_solution: None,
    }
}

/// Stiff Bernoulli equation `u' = 2u/(1+t) − t²u²`, `u(0) = 2` on `[0, 10]`.
pub fn bernoulli() -> BenchmarkCase {
    bernoulli_with_coarse_steps(1).expect("reference mesh is valid")
}

/// Bernoulli case with `coarse_steps_per_subinterval` coarse steps in each
/// of the 20 sub-intervals and the fine step fixed at `10/2000`. The
/// reference iteration counts are 8, 5 and 4 for 1, 2 and 3 coarse steps.
pub fn bernoulli_with_coarse_steps(coarse_steps_per_subinterval: usize) -> Result<BenchmarkCase> {
    let system = OdeSystem::new(state(&[2.0]), 0.0, 10.0, |u, t, out| {
        out[0] = 2.0 / (1.0 + t) * u[0] - t * t * u[0] * u[0];
    })?;
    let mesh = TimeMesh::from_step_counts(&system, 20, coarse_steps_per_subinterval, 100)?;
    let expected_kd = match coarse_steps_per_subinterval {
        1 => 8,
        2 => 5,
        3 => 4,
        _ => 0,
    };
    Ok(BenchmarkCase {
        name: ProblemName::Bernoulli,
        system,
        mesh,
        tolerance: 1e-10,
        expected_kd,
        analytic_solution: Some(Arc::new(|t: f64| {
            let denom = t.powi(5) / 5.0 + t.powi(4) / 2.0 + t.powi(3) / 3.0 + 0.5;
            state(&[(1.0 + t).powi(2) / denom])
        })),
    })
}

/// Brusselator with `(A, B) = (1, 3)`, `u(0) = (1, 3.07)` on `[0, 15.3]`.
pub fn brusselator() -> BenchmarkCase {
    const A: f64 = 1.0;
    const B: f64 = 3.0;
    let system = OdeSystem::new(state(&[1.0, 3.07]), 0.0, 15.3, |u, _, out| {
        let sq = u[0] * u[0] * u[1];
        out[0] = A + sq - (B + 1.0) * u[0];
        out[1] = B * u[0] - sq;
    })
    .expect("valid system");
    BenchmarkCase {
        name: ProblemName::Brusselator,
        mesh: make_mesh(&system, 25, 1, 100).expect("valid mesh"),
        system,
        tolerance: 1e-6,
        expected_kd: 7,
        analytic_solution: None,
    }
}

/// Square limit cycle, `u(0) = (1.5, 1.5)` on `[0, 60]`.
pub fn square_limit_cycle() -> BenchmarkCase {
    let system = OdeSystem::new(state(&[1.5, 1.5]), 0.0, 60.0, |u, _, out| {
        let (s1, c1) = u[0].sin_cos();
        let (s2, c2) = u[1].sin_cos();
        out[0] = -s1 * (c1 / 10.0 + c2);
        out[1] = -s2 * (c2 / 10.0 - c1);
    })
    .expect("valid system");
    BenchmarkCase {
        name: ProblemName::Square,
        mesh: make_mesh(&system, 30, 1, 100).expect("valid mesh"),
        system,
        tolerance: 1e-8,
        expected_kd: 20,
        analytic_solution: None,
    }
}

/// Lorenz system with `(10, 28, 8/3)`, `u(0) = (−15, −15, 20)` on `[0, 18]`.
pub fn lorenz() -> BenchmarkCase {
    const SIGMA: f64 = 10.0;
    const RHO: f64 = 28.0;
    const BETA: f64 = 8.0 / 3.0;
    let system = OdeSystem::new(state(&[-15.0, -15.0, 20.0]), 0.0, 18.0, |u, _, out| {
        out[0] = SIGMA * (u[1] - u[0]);
        out[1] = RHO * u[0] - u[0] * u[2] - u[1];
        out[2] = u[0] * u[1] - BETA * u[2];
    })
    .expect("valid system");
    BenchmarkCase {
        name: ProblemName::Lorenz,
        mesh: make_mesh(&system, 50, 5, 75).expect("valid mesh"),
        system,
        tolerance: 1e-8,
        expected_kd: 20,
        analytic_solution: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in ProblemName::ALL {
            assert_eq!(p.as_str().parse::<ProblemName>().unwrap(), p);
            assert_eq!(p.case().name, p);
        }
        assert!("heat".parse::<ProblemName>().is_err());
    }

    #[test]
    fn reference_steps() {
        let rel = |a: f64, b: f64| ((a - b) / b).abs() < 1e-14;
        let c = scalar_nonlinear();
        assert!(rel(c.mesh.coarse_step(), 100.0 / 80.0) && rel(c.mesh.fine_step(), 100.0 / 8000.0));
        let c = bernoulli();
        assert!(rel(c.mesh.coarse_step(), 10.0 / 20.0) && rel(c.mesh.fine_step(), 10.0 / 2000.0));
        let c = brusselator();
        assert!(rel(c.mesh.coarse_step(), 15.3 / 25.0) && rel(c.mesh.fine_step(), 15.3 / 2500.0));
        let c = square_limit_cycle();
        assert!(rel(c.mesh.coarse_step(), 60.0 / 30.0) && rel(c.mesh.fine_step(), 60.0 / 3000.0));
        let c = lorenz();
        assert!(rel(c.mesh.coarse_step(), 18.0 / 250.0) && rel(c.mesh.fine_step(), 18.0 / 18750.0));
        for k in [2, 3] {
            let c = bernoulli_with_coarse_steps(k).unwrap();
            assert!(rel(c.mesh.coarse_step(), 10.0 / (20 * k) as f64));
            assert!(rel(c.mesh.fine_step(), 10.0 / 2000.0));
        }
    }

    #[test]
    fn analytic_bernoulli_initial_value() {
        let c = bernoulli();
        let f = c.analytic_solution.unwrap();
        assert_eq!(f(0.0).as_slice(), &[2.0]);
    }
}
