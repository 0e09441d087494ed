use pint_core::experiments::{coarse_step_sweep, estimate_k_distribution, expectation_curve};
use pint_core::problems::{bernoulli, brusselator, square_limit_cycle};
use pint_core::{
    run_parareal, run_stochastic_parareal, serial_fine_solution, PintError, SamplingRule,
    SolverConfig,
};
use proptest::prelude::*;

fn stochastic(tolerance: f64, m: usize, rule: SamplingRule, seed: u64) -> SolverConfig {
    SolverConfig {
        n_samples: m,
        sampling_rule: rule,
        rng_seed: seed,
        ..SolverConfig::with_tolerance(tolerance)
    }
}

#[test]
fn converged_runs_end_below_tolerance() {
    let case = brusselator();
    for rule in SamplingRule::ALL {
        let r = run_stochastic_parareal(
            &case.system,
            &case.mesh,
            &stochastic(case.tolerance, 4, rule, 11),
        )
        .unwrap();
        assert!(r.converged);
        assert!(*r.per_iteration_error.last().unwrap() < case.tolerance);
        assert_eq!(
            *r.prefix_history.last().unwrap(),
            case.mesh.n_subintervals()
        );
        assert!(r.iterations < case.mesh.n_subintervals());
    }
}

#[test]
fn stochastic_solution_close_to_serial_fine() {
    let case = square_limit_cycle();
    let (serial, _) = serial_fine_solution(&case.system, &case.mesh).unwrap();
    let r = run_stochastic_parareal(
        &case.system,
        &case.mesh,
        &stochastic(case.tolerance, 6, SamplingRule::Rule2, 5),
    )
    .unwrap();
    let worst = r
        .boundary_values
        .iter()
        .zip(&serial)
        .map(|(a, b)| a.distance_inf(b))
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
    assert_eq!(r.fine_solution.len(), case.mesh.total_fine_steps() + 1);
}

#[test]
fn same_seed_same_run_different_seed_differs() {
    let case = bernoulli();
    let cfg = stochastic(case.tolerance, 5, SamplingRule::Rule3, 99);
    let a = run_stochastic_parareal(&case.system, &case.mesh, &cfg).unwrap();
    let b = run_stochastic_parareal(&case.system, &case.mesh, &cfg).unwrap();
    assert_eq!(a.boundary_values, b.boundary_values);
    let c = run_stochastic_parareal(
        &case.system,
        &case.mesh,
        &SolverConfig {
            rng_seed: 100,
            ..cfg
        },
    )
    .unwrap();
    assert_ne!(a.boundary_values, c.boundary_values);
}

#[test]
fn iteration_cap_reports_not_converged() {
    let case = brusselator();
    let cfg = SolverConfig {
        max_iterations: Some(2),
        ..stochastic(case.tolerance, 3, SamplingRule::Rule1, 1)
    };
    let r = run_stochastic_parareal(&case.system, &case.mesh, &cfg).unwrap();
    assert_eq!(r.iterations, 2);
    assert!(!r.converged);
}

#[test]
fn invalid_config_rejected() {
    let case = bernoulli();
    let cfg = stochastic(case.tolerance, 0, SamplingRule::Rule1, 0);
    assert!(matches!(
        run_stochastic_parareal(&case.system, &case.mesh, &cfg),
        Err(PintError::InvalidConfig(_))
    ));
}

#[test]
fn distributions_reproducible_across_workers() {
    let case = bernoulli();
    let base = stochastic(case.tolerance, 3, SamplingRule::Rule1, 0);
    let one = estimate_k_distribution(
        &case,
        &SolverConfig {
            worker_count: 1,
            ..base.clone()
        },
        16,
        7,
    )
    .unwrap();
    let three = estimate_k_distribution(
        &case,
        &SolverConfig {
            worker_count: 3,
            ..base
        },
        16,
        7,
    )
    .unwrap();
    assert_eq!(one, three);
    assert_eq!(one.counts.values().sum::<usize>() + one.failures, 16);
}

#[test]
fn curve_starts_at_point_mass() {
    let case = bernoulli();
    let curve = expectation_curve(
        &case,
        &SolverConfig::with_tolerance(case.tolerance),
        &[1, 4],
        12,
        3,
    )
    .unwrap();
    assert_eq!(curve[0].expectation, 8.0);
    assert_eq!(curve[0].sd, 0.0);
    assert!(curve[1].expectation < 8.0);
}

#[test]
fn sweep_recomputes_reference_counts() {
    let case = bernoulli();
    let rows = coarse_step_sweep(
        &case,
        &SolverConfig::with_tolerance(case.tolerance),
        &[1, 2, 3],
        &[1, 6],
        10,
        0,
    )
    .unwrap();
    let kds: Vec<usize> = rows.iter().step_by(2).map(|r| r.kd).collect();
    assert_eq!(kds, [8, 5, 4]);
    assert!(rows
        .iter()
        .filter(|r| r.n_samples == 1)
        .all(|r| r.beat_probability == 0.0));
    assert!(rows[1].beat_probability >= rows[5].beat_probability);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prefix_strictly_increases(
        log_tol in -12.0f64..-4.0,
        m in 1usize..6,
        rule in 0usize..4,
        seed in any::<u64>(),
    ) {
        let case = bernoulli();
        let cfg = stochastic(10f64.powf(log_tol), m, SamplingRule::ALL[rule], seed);
        let r = run_stochastic_parareal(&case.system, &case.mesh, &cfg).unwrap();
        prop_assert!(r.prefix_history.windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(r.prefix_history.len(), r.iterations);
        prop_assert_eq!(r.converged, *r.per_iteration_error.last().unwrap() < cfg.tolerance);
        let det = run_parareal(&case.system, &case.mesh, &cfg).unwrap();
        if m == 1 {
            prop_assert_eq!(r.boundary_values, det.boundary_values);
        }
    }
}
