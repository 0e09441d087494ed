//! Stochastic parareal.
//!
//! The first iteration is plain parareal. Every later iteration samples
//! candidate initial values at each unconverged boundary (the first candidate
//! is always the current predictor-corrector value), propagates all of them
//! with the fine solver in parallel, keeps the candidate closest to the fine
//! value arriving from the previous sub-interval, and feeds the selected
//! values into the predictor-corrector.

use rayon::prelude::*;

use crate::config::SolverConfig;
use crate::error::{PintError, Result};
use crate::integrators::Propagator;
use crate::ledger::ProcessorLedger;
use crate::mesh::TimeMesh;
use crate::ode::{OdeSystem, StateVector};
use crate::parareal::{
    correct_and_update, finish, parareal_iteration, zeroth_iteration, PintState, RunResult,
    StoppingCriterion,
};
use crate::pool;
use crate::sampling::{moments_for_rule, sample_for_rule, IterationData, RngStream, SampleBatch};

/// Sequentially picks, at each boundary, the candidate nearest (Euclidean)
/// to the fine value arriving from the previous sub-interval, starting from
/// `anchor_fine = ℱ(U_I)`. Candidates whose propagation blew up are skipped;
/// ties go to the lowest sample index.
pub fn select_optimal(
    batches: &mut [SampleBatch],
    anchor_fine: &StateVector,
) -> Result<Vec<usize>> {
    let mut arriving = anchor_fine.clone();
    let mut chosen = Vec::with_capacity(batches.len());
    for batch in batches.iter_mut() {
        let mut best: Option<(usize, f64)> = None;
        for (j, (sample, prop)) in batch
            .samples
            .iter()
            .zip(&batch.fine_propagations)
            .enumerate()
        {
            if prop.is_none() {
                continue;
            }
            let dist = sample.distance_l2(&arriving);
            if best.is_none_or(|(_, d)| dist < d) {
                best = Some((j, dist));
            }
        }
        let (j, _) = best.ok_or(PintError::AllSamplesBlewUp {
            subinterval: batch.subinterval_index,
        })?;
        batch.selected_index = Some(j);
        arriving = batch.fine_propagations[j]
            .clone()
            .expect("selected propagation is finite");
        chosen.push(j);
    }
    Ok(chosen)
}

/// Predictor-corrector with selected samples: the first unconverged boundary
/// uses `ℱ(U_I) − 𝒢(U_I)`, later ones `ℱ(α̂ₙ₋₁) − 𝒢(α̂ₙ₋₁)`. Batches must
/// already carry their selections. Returns the number of new coarse solves.
pub fn stochastic_predictor_corrector(
    state: &mut PintState,
    anchor_fine: StateVector,
    batches: &[SampleBatch],
    system: &OdeSystem,
    mesh: &TimeMesh,
    criterion: StoppingCriterion,
) -> Result<usize> {
    let first = state.converged_prefix + 1;
    let coarse = Propagator::coarse(system, mesh);

    // 𝒢 of the selected samples; when the pinned candidate wins, 𝒢(Uᵏ⁻¹ₙ)
    // is already known from the previous sweep.
    let coarse_of_selected: Vec<Option<StateVector>> = batches
        .par_iter()
        .map(|b| {
            let j = b.selected_index.expect("selection precedes correction");
            if j == 0 {
                Ok(None)
            } else {
                let n = b.subinterval_index;
                coarse
                    .propagate(&b.samples[j], mesh.boundary(n), mesh.boundary(n + 1))
                    .map(Some)
            }
        })
        .collect::<Result<_>>()?;

    let mut fine_values = Vec::with_capacity(batches.len() + 1);
    let mut subtracted = Vec::with_capacity(batches.len() + 1);
    fine_values.push(anchor_fine);
    subtracted.push(state.coarse[first].clone());
    let mut new_coarse_calls = 0;
    for (b, g) in batches.iter().zip(coarse_of_selected) {
        let j = b.selected_index.expect("selection precedes correction");
        fine_values.push(
            b.fine_propagations[j]
                .clone()
                .expect("selected propagation is finite"),
        );
        subtracted.push(match g {
            Some(g) => {
                new_coarse_calls += 1;
                g
            }
            None => state.coarse[b.subinterval_index + 1].clone(),
        });
    }
    state.coarse_solver_calls += new_coarse_calls;
    correct_and_update(state, system, mesh, fine_values, subtracted, criterion)?;
    Ok(new_coarse_calls)
}

/// Mutable pieces carried between stochastic iterations.
struct Sampler {
    config: SolverConfig,
    rng: RngStream,
    ledger: Option<ProcessorLedger>,
    /// Last iteration's batches, for the correlation estimates.
    previous: Vec<SampleBatch>,
}

impl Sampler {
    fn new(config: &SolverConfig) -> Self {
        Self {
            config: config.clone(),
            rng: RngStream::new(config.rng_seed),
            ledger: None,
            previous: Vec::new(),
        }
    }

    fn previous_propagations(&self, n: usize) -> Option<Vec<StateVector>> {
        self.previous
            .iter()
            .find(|b| b.subinterval_index == n)
            .map(SampleBatch::finite_propagations)
    }

    /// Candidate values at `I+1 ..= N−1`, drawn in boundary order.
    fn draw(
        &mut self,
        state: &PintState,
        ledger: &ProcessorLedger,
        mesh: &TimeMesh,
    ) -> Result<Vec<SampleBatch>> {
        let first = state.converged_prefix + 1;
        let mut batches = Vec::new();
        for n in first..mesh.n_subintervals() {
            let m_n = ledger.samples_at(n);
            let mut samples = Vec::with_capacity(m_n);
            samples.push(state.u[n].clone());
            if m_n > 1 {
                let prior = self.previous_propagations(n - 1);
                let data = IterationData {
                    k: state.k + 1,
                    fine_prev: &state.fine[n],
                    predictor_corrector: &state.u[n],
                    coarse_now: &state.coarse[n],
                    coarse_prev: &state.coarse_prev[n],
                    prior_propagations: prior.as_deref(),
                };
                let moments = moments_for_rule(
                    self.config.sampling_rule,
                    &data,
                    self.config.use_correlations,
                );
                samples.extend(sample_for_rule(
                    self.config.sampling_rule,
                    &moments,
                    m_n,
                    &mut self.rng,
                )?);
            }
            batches.push(SampleBatch {
                subinterval_index: n,
                samples,
                fine_propagations: Vec::new(),
                selected_index: None,
            });
        }
        Ok(batches)
    }

    fn iterate(
        &mut self,
        state: &mut PintState,
        system: &OdeSystem,
        mesh: &TimeMesh,
        criterion: StoppingCriterion,
    ) -> Result<()> {
        let n_sub = mesh.n_subintervals();
        let prefix = state.converged_prefix;
        let reassign = self.config.reassign_idle && self.config.n_samples > 1;
        let mut ledger = match self.ledger.take() {
            Some(mut l) => {
                l.advance(prefix);
                l
            }
            None => ProcessorLedger::new(self.config.n_samples, prefix, n_sub, reassign),
        };

        let mut batches = self.draw(state, &ledger, mesh)?;

        let fine = Propagator::fine(system, mesh);
        let tasks: Vec<(usize, usize)> = batches
            .iter()
            .enumerate()
            .flat_map(|(b, batch)| (0..batch.samples.len()).map(move |j| (b, j)))
            .collect();
        let (anchor, propagated) = {
            let batches = &batches;
            rayon::join(
                || {
                    fine.propagate(
                        &state.u[prefix],
                        mesh.boundary(prefix),
                        mesh.boundary(prefix + 1),
                    )
                },
                || {
                    tasks
                        .par_iter()
                        .map(|&(b, j)| {
                            let n = batches[b].subinterval_index;
                            fine.propagate(
                                &batches[b].samples[j],
                                mesh.boundary(n),
                                mesh.boundary(n + 1),
                            )
                            .ok()
                        })
                        .collect::<Vec<_>>()
                },
            )
        };
        let mut propagated = propagated.into_iter();
        for batch in batches.iter_mut() {
            batch.fine_propagations = propagated.by_ref().take(batch.samples.len()).collect();
        }
        let anchor = anchor?;
        let launched = tasks.len() + 1;
        debug_assert_eq!(launched, ledger.usage());
        state.fine_solver_calls += launched;
        state.processor_usage.push(ledger.record_usage());

        select_optimal(&mut batches, &anchor)?;
        stochastic_predictor_corrector(state, anchor, &batches, system, mesh, criterion)?;

        self.previous = batches;
        self.ledger = Some(ledger);
        Ok(())
    }
}

/// Runs stochastic parareal. With `n_samples = 1` this is exactly
/// [`crate::run_parareal`].
pub fn run_stochastic_parareal(
    system: &OdeSystem,
    mesh: &TimeMesh,
    config: &SolverConfig,
) -> Result<RunResult> {
    config.validate()?;
    let criterion = StoppingCriterion::from(config);
    let cap = config.iteration_cap(mesh.n_subintervals());
    pool::install(config.worker_count, || {
        let mut state = zeroth_iteration(system, mesh)?;
        parareal_iteration(&mut state, system, mesh, criterion)?;
        let mut sampler = Sampler::new(config);
        while !state.is_converged() && state.k < cap {
            sampler.iterate(&mut state, system, mesh, criterion)?;
        }
        finish(state, system, mesh)
    })
}
