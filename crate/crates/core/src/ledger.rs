//! Logical processor accounting for the stochastic iterations.
//!
//! Sampling at boundaries `I+1 ..= N−1` with `M` candidates each, plus one
//! fine run from the last converged value, needs `M(N − I − 1) + 1`
//! processors. When sub-intervals converge their blocks of `M` processors
//! are handed, one block at a time, to the earliest unconverged boundary
//! with the fewest samples.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProcessorLedger {
    block_size: usize,
    total_processors: usize,
    samples: BTreeMap<usize, usize>,
    peak_usage: usize,
    reassign: bool,
}

impl ProcessorLedger {
    /// Base allocation right after the deterministic first iteration left
    /// the converged prefix at `prefix`.
    pub fn new(block_size: usize, prefix: usize, n_subintervals: usize, reassign: bool) -> Self {
        let block_size = block_size.max(1);
        let samples: BTreeMap<usize, usize> = ((prefix + 1)..n_subintervals)
            .map(|n| (n, block_size))
            .collect();
        let total_processors = block_size * samples.len() + 1;
        Self {
            block_size,
            total_processors,
            samples,
            peak_usage: 0,
            reassign,
        }
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn total_processors(&self) -> usize {
        self.total_processors
    }

    pub fn peak_usage(&self) -> usize {
        self.peak_usage
    }

    /// `Mₙ` for an unconverged boundary, the base `M` otherwise.
    pub fn samples_at(&self, n: usize) -> usize {
        self.samples.get(&n).copied().unwrap_or(self.block_size)
    }

    pub fn per_subinterval_samples(&self) -> &BTreeMap<usize, usize> {
        &self.samples
    }

    /// Processors busy in the current iteration: `Σ Mₙ + 1`.
    pub fn usage(&self) -> usize {
        self.samples.values().sum::<usize>() + 1
    }

    pub fn record_usage(&mut self) -> usize {
        let usage = self.usage();
        self.peak_usage = self.peak_usage.max(usage);
        usage
    }

    /// Drops boundaries that are now inside the converged prefix and
    /// reassigns their processors.
    pub fn advance(&mut self, new_prefix: usize) {
        let still_open = self.samples.split_off(&(new_prefix + 1));
        let freed: usize = std::mem::replace(&mut self.samples, still_open)
            .values()
            .sum();
        if self.reassign {
            self.reassign_idle(freed / self.block_size);
        }
    }

    /// Gives each of `freed_blocks` blocks to the unconverged boundary with
    /// the fewest samples, ties going to the earliest.
    pub fn reassign_idle(&mut self, freed_blocks: usize) {
        for _ in 0..freed_blocks {
            let Some((_, count)) = self
                .samples
                .iter_mut()
                .min_by_key(|(n, count)| (**count, **n))
            else {
                return;
            };
            *count += self.block_size;
        }
    }
}
