//! Parallel-in-time ODE integration: deterministic parareal, its
//! sampling-based stochastic extension, the benchmark problems they are
//! studied on, and a Monte Carlo harness for convergence-rate statistics.

pub mod config;
pub mod error;
pub mod experiments;
pub mod integrators;
pub mod ledger;
pub mod mesh;
pub mod ode;
pub mod parareal;
mod pool;
pub mod problems;
pub mod sampling;
pub mod stochastic;

pub use config::{SamplingRule, SolverConfig};
pub use error::{PintError, Result};
pub use integrators::{rk4_step, serial_fine_solution, Propagator, Role, Trajectory};
pub use ledger::ProcessorLedger;
pub use mesh::{make_mesh, TimeMesh};
pub use ode::{OdeSystem, StateVector};
pub use parareal::{
    parareal_iteration, run_parareal, zeroth_iteration, PintState, RunResult, StoppingCriterion,
};
pub use problems::{BenchmarkCase, ProblemName};
pub use stochastic::{run_stochastic_parareal, select_optimal, stochastic_predictor_corrector};
