//! Deterministic parareal with frozen converged prefixes.
//!
//! Iteration `k` propagates the current boundary values with the fine
//! solver in parallel, then runs the sequential predictor-corrector sweep
//! `Uᵏₙ = ℱ(Uᵏ⁻¹ₙ₋₁) + 𝒢(Uᵏₙ₋₁) − 𝒢(Uᵏ⁻¹ₙ₋₁)` over the unconverged
//! sub-intervals only. Once index `n` joins the converged prefix its values
//! are never touched again.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::Result;
use crate::integrators::{Propagator, Trajectory};
use crate::mesh::TimeMesh;
use crate::ode::{OdeSystem, StateVector};
use crate::pool;

/// Tolerance test applied to successive iterates at each boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingCriterion {
    pub tolerance: f64,
    pub relative: bool,
}

impl StoppingCriterion {
    pub fn absolute(tolerance: f64) -> Self {
        Self {
            tolerance,
            relative: false,
        }
    }

    fn change(&self, new: &StateVector, old: &StateVector) -> f64 {
        let diff = new.distance_inf(old);
        if self.relative {
            let scale = new.norm_inf();
            if scale > 0.0 {
                return diff / scale;
            }
        }
        diff
    }
}

impl From<&SolverConfig> for StoppingCriterion {
    fn from(cfg: &SolverConfig) -> Self {
        Self {
            tolerance: cfg.tolerance,
            relative: cfg.relative_tolerance,
        }
    }
}

/// Everything the predictor-corrector carries between iterations.
/// All vectors are indexed by boundary `n = 0..=N`.
#[derive(Debug, Clone)]
pub struct PintState {
    /// Completed predictor-corrector sweeps.
    pub k: usize,
    /// `Uᵏ`
    pub u: Vec<StateVector>,
    /// `Uᵏ⁻¹`
    pub u_prev: Vec<StateVector>,
    /// `Ûᵏₙ = 𝒢(Uᵏₙ₋₁)` from the latest sweep.
    pub coarse: Vec<StateVector>,
    /// Coarse values subtracted in the latest correction.
    pub coarse_prev: Vec<StateVector>,
    /// Fine values added in the latest correction.
    pub fine: Vec<StateVector>,
    /// Converged prefix `I`.
    pub converged_prefix: usize,
    pub prefix_history: Vec<usize>,
    pub per_iteration_error: Vec<f64>,
    pub processor_usage: Vec<usize>,
    pub fine_solver_calls: usize,
    pub coarse_solver_calls: usize,
}

impl PintState {
    pub fn n_subintervals(&self) -> usize {
        self.u.len() - 1
    }

    pub fn is_converged(&self) -> bool {
        self.converged_prefix == self.n_subintervals()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    /// `k_d` for parareal, `k_s` for the stochastic variant.
    pub iterations: usize,
    pub converged: bool,
    pub boundary_values: Vec<StateVector>,
    /// Fine-resolution solution recomputed from the final boundary values.
    pub fine_solution: Trajectory,
    /// Largest boundary change checked by the stopping test at each iteration.
    pub per_iteration_error: Vec<f64>,
    /// Converged prefix `I` after each iteration.
    pub prefix_history: Vec<usize>,
    /// Logical processors busy with fine propagations at each iteration.
    pub processor_usage: Vec<usize>,
    pub max_processors_used: usize,
    /// Fine solves over one sub-interval made by the iterations (the final
    /// trajectory assembly is not counted).
    pub fine_solver_calls: usize,
    pub coarse_solver_calls: usize,
}

impl RunResult {
    /// Approximate speedup bound `N / k`. Reported only.
    pub fn speedup_bound(&self) -> f64 {
        (self.boundary_values.len() - 1) as f64 / self.iterations.max(1) as f64
    }
}

/// Serial coarse pass producing the initial boundary guesses `U⁰ₙ`.
pub fn zeroth_iteration(system: &OdeSystem, mesh: &TimeMesh) -> Result<PintState> {
    let coarse = Propagator::coarse(system, mesh);
    let n_sub = mesh.n_subintervals();
    let mut values = Vec::with_capacity(n_sub + 1);
    values.push(system.initial_value().clone());
    for n in 1..=n_sub {
        let next = coarse.propagate(&values[n - 1], mesh.boundary(n - 1), mesh.boundary(n))?;
        values.push(next);
    }
    Ok(PintState {
        k: 0,
        u: values.clone(),
        u_prev: values.clone(),
        coarse: values.clone(),
        coarse_prev: values.clone(),
        fine: values,
        converged_prefix: 0,
        prefix_history: Vec::new(),
        per_iteration_error: Vec::new(),
        processor_usage: Vec::new(),
        fine_solver_calls: 0,
        coarse_solver_calls: n_sub,
    })
}

/// Fine propagation of `U_{n-1}` for every unconverged `n`, in parallel.
pub(crate) fn fine_from_boundaries(
    state: &PintState,
    system: &OdeSystem,
    mesh: &TimeMesh,
) -> Result<Vec<StateVector>> {
    let fine = Propagator::fine(system, mesh);
    let first = state.converged_prefix + 1;
    (first..=mesh.n_subintervals())
        .into_par_iter()
        .map(|n| fine.propagate(&state.u[n - 1], mesh.boundary(n - 1), mesh.boundary(n)))
        .collect()
}

/// Sequential predictor-corrector sweep plus the convergence update.
///
/// `fine_values[j]` and `subtracted[j]` belong to boundary `I + 1 + j`; the
/// new value there is `fine + (𝒢(Uᵏₙ₋₁) − subtracted)`. The coarse
/// difference is formed first so that it vanishes exactly when the
/// predecessor is unchanged.
pub(crate) fn correct_and_update(
    state: &mut PintState,
    system: &OdeSystem,
    mesh: &TimeMesh,
    fine_values: Vec<StateVector>,
    subtracted: Vec<StateVector>,
    criterion: StoppingCriterion,
) -> Result<()> {
    let n_sub = mesh.n_subintervals();
    let first = state.converged_prefix + 1;
    debug_assert!(first <= n_sub, "sweep requested on a converged state");
    debug_assert_eq!(fine_values.len(), n_sub + 1 - first);
    debug_assert_eq!(subtracted.len(), n_sub + 1 - first);

    let coarse = Propagator::coarse(system, mesh);
    let mut new_u = state.u.clone();
    for (j, n) in (first..=n_sub).enumerate() {
        let predicted = coarse.propagate(&new_u[n - 1], mesh.boundary(n - 1), mesh.boundary(n))?;
        let correction = &predicted - &subtracted[j];
        new_u[n] = &fine_values[j] + &correction;
        state.coarse[n] = predicted;
    }
    state.coarse_solver_calls += n_sub + 1 - first;

    for (j, (f, c)) in fine_values.into_iter().zip(subtracted).enumerate() {
        state.fine[first + j] = f;
        state.coarse_prev[first + j] = c;
    }

    // The new prefix is the largest n whose predecessors (i < n) all moved by
    // less than the tolerance. Boundary I+1 was propagated from a converged
    // value, so the prefix always grows by at least one.
    let changes: Vec<f64> = (first..=n_sub)
        .map(|n| criterion.change(&new_u[n], &state.u[n]))
        .collect();
    let first_unsettled = changes
        .iter()
        .position(|&c| c >= criterion.tolerance || c.is_nan())
        .map_or(n_sub + 1, |j| first + j);
    let new_prefix = first_unsettled.min(n_sub);
    let checked = changes[..changes.len() - 1]
        .iter()
        .copied()
        .fold(0.0_f64, f64::max);

    state.u_prev = std::mem::replace(&mut state.u, new_u);
    assert!(
        new_prefix > state.converged_prefix,
        "converged prefix failed to advance"
    );
    state.converged_prefix = new_prefix;
    state.k += 1;
    state.prefix_history.push(new_prefix);
    state.per_iteration_error.push(checked);
    Ok(())
}

/// One deterministic parareal iteration on the unconverged sub-intervals.
pub fn parareal_iteration(
    state: &mut PintState,
    system: &OdeSystem,
    mesh: &TimeMesh,
    criterion: StoppingCriterion,
) -> Result<()> {
    let first = state.converged_prefix + 1;
    let fine_values = fine_from_boundaries(state, system, mesh)?;
    let launched = fine_values.len();
    state.fine_solver_calls += launched;
    state.processor_usage.push(launched);
    let subtracted = state.coarse[first..].to_vec();
    correct_and_update(state, system, mesh, fine_values, subtracted, criterion)
}

/// Recomputes the fine trajectory from the final boundary values, one
/// sub-interval per task.
pub(crate) fn assemble_fine_solution(
    boundary_values: &[StateVector],
    system: &OdeSystem,
    mesh: &TimeMesh,
) -> Result<Trajectory> {
    let fine = Propagator::fine(system, mesh);
    let pieces: Vec<Trajectory> = (0..mesh.n_subintervals())
        .into_par_iter()
        .map(|n| {
            fine.propagate_trajectory(&boundary_values[n], mesh.boundary(n), mesh.boundary(n + 1))
        })
        .collect::<Result<_>>()?;
    let mut traj = Trajectory {
        times: Vec::with_capacity(mesh.total_fine_steps() + 1),
        states: Vec::with_capacity(mesh.total_fine_steps() + 1),
    };
    for piece in pieces {
        traj.extend_joined(piece);
    }
    Ok(traj)
}

pub(crate) fn finish(state: PintState, system: &OdeSystem, mesh: &TimeMesh) -> Result<RunResult> {
    let fine_solution = assemble_fine_solution(&state.u, system, mesh)?;
    let converged = state.is_converged();
    Ok(RunResult {
        iterations: state.k,
        converged,
        max_processors_used: state.processor_usage.iter().copied().max().unwrap_or(0),
        boundary_values: state.u,
        fine_solution,
        per_iteration_error: state.per_iteration_error,
        prefix_history: state.prefix_history,
        processor_usage: state.processor_usage,
        fine_solver_calls: state.fine_solver_calls,
        coarse_solver_calls: state.coarse_solver_calls,
    })
}

/// Runs parareal until every sub-interval has converged or the iteration
/// cap is reached (`converged = false` in that case).
pub fn run_parareal(
    system: &OdeSystem,
    mesh: &TimeMesh,
    config: &SolverConfig,
) -> Result<RunResult> {
    config.validate()?;
    let criterion = StoppingCriterion::from(config);
    let cap = config.iteration_cap(mesh.n_subintervals());
    pool::install(config.worker_count, || {
        let mut state = zeroth_iteration(system, mesh)?;
        while !state.is_converged() && state.k < cap {
            parareal_iteration(&mut state, system, mesh, criterion)?;
        }
        finish(state, system, mesh)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::serial_fine_solution;
    use crate::mesh::make_mesh;

    fn scalar_system() -> OdeSystem {
        OdeSystem::new(
            StateVector::new(vec![1.0]).unwrap(),
            0.0,
            10.0,
            |u, t, o| o[0] = (u[0]).sin() - 0.5 * u[0] + (2.0 * t).cos(),
        )
        .unwrap()
    }

    #[test]
    fn zeroth_iteration_single_interval() {
        let sys = scalar_system();
        let mesh = make_mesh(&sys, 1, 4, 10).unwrap();
        let state = zeroth_iteration(&sys, &mesh).unwrap();
        let g = Propagator::coarse(&sys, &mesh)
            .propagate(sys.initial_value(), 0.0, 10.0)
            .unwrap();
        assert_eq!(state.u[1], g);
        assert_eq!(state.converged_prefix, 0);
    }

    #[test]
    fn zeroth_iteration_constant_field() {
        let sys = OdeSystem::new(
            StateVector::new(vec![0.5, -2.0]).unwrap(),
            0.0,
            4.0,
            |_, _, o| o.fill(0.0),
        )
        .unwrap();
        let mesh = make_mesh(&sys, 8, 2, 5).unwrap();
        let state = zeroth_iteration(&sys, &mesh).unwrap();
        assert!(state.u.iter().all(|u| u == sys.initial_value()));
    }

    #[test]
    fn identical_solvers_converge_in_one_sweep() {
        let sys = scalar_system();
        let mesh = TimeMesh::unchecked(&sys, 10, 40, 40);
        let res = run_parareal(&sys, &mesh, &SolverConfig::with_tolerance(1e-10)).unwrap();
        assert_eq!(res.iterations, 1);
        let (serial, _) = serial_fine_solution(&sys, &mesh).unwrap();
        for (a, b) in res.boundary_values.iter().zip(&serial) {
            assert!(a.distance_inf(b) < 1e-12);
        }
    }

    #[test]
    fn infinite_tolerance_converges_after_one_iteration() {
        let sys = scalar_system();
        let mesh = make_mesh(&sys, 12, 1, 20).unwrap();
        let res = run_parareal(&sys, &mesh, &SolverConfig::with_tolerance(f64::INFINITY)).unwrap();
        assert_eq!(res.iterations, 1);
        assert!(res.converged);
        assert_eq!(res.prefix_history, vec![12]);
    }

    #[test]
    fn zero_tolerance_reproduces_serial_fine() {
        let sys = scalar_system();
        let mesh = make_mesh(&sys, 9, 1, 30).unwrap();
        let res = run_parareal(&sys, &mesh, &SolverConfig::with_tolerance(0.0)).unwrap();
        assert_eq!(res.iterations, 9);
        assert_eq!(res.prefix_history, (1..=9).collect::<Vec<_>>());
        let (serial, traj) = serial_fine_solution(&sys, &mesh).unwrap();
        assert_eq!(res.boundary_values, serial);
        assert_eq!(res.fine_solution, traj);
    }

    #[test]
    fn iteration_cap_reports_unconverged() {
        let sys = scalar_system();
        let mesh = make_mesh(&sys, 9, 1, 30).unwrap();
        let cfg = SolverConfig {
            max_iterations: Some(3),
            ..SolverConfig::with_tolerance(0.0)
        };
        let res = run_parareal(&sys, &mesh, &cfg).unwrap();
        assert_eq!(res.iterations, 3);
        assert!(!res.converged);
    }

    #[test]
    fn counts_and_prefix_growth() {
        let sys = scalar_system();
        let mesh = make_mesh(&sys, 20, 2, 25).unwrap();
        let res = run_parareal(&sys, &mesh, &SolverConfig::with_tolerance(1e-9)).unwrap();
        assert!(res.converged);
        assert!(res.prefix_history.windows(2).all(|w| w[1] > w[0]));
        assert!(res.per_iteration_error.last().unwrap() < &1e-9);
        assert_eq!(res.max_processors_used, 20);
        assert_eq!(
            res.fine_solver_calls,
            res.processor_usage.iter().sum::<usize>()
        );
        let mut expected_coarse = 20;
        let mut prefix = 0;
        for &p in &res.prefix_history {
            expected_coarse += 20 - prefix;
            prefix = p;
        }
        assert_eq!(res.coarse_solver_calls, expected_coarse);
        assert_eq!(res.fine_solution.len(), mesh.total_fine_steps() + 1);
    }
}
