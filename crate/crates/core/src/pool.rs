//! Shared worker pools keyed by worker count.
//!
//! Every parallel section collects results in index order, so the output of
//! a run never depends on which pool (or how many workers) executed it.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::{ThreadPool, ThreadPoolBuilder};

static POOLS: OnceLock<Mutex<HashMap<usize, Arc<ThreadPool>>>> = OnceLock::new();

fn pool(workers: usize) -> Arc<ThreadPool> {
    let workers = workers.max(1);
    let mut pools = POOLS
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    pools
        .entry(workers)
        .or_insert_with(|| {
            Arc::new(
                ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .thread_name(move |i| format!("pint-{workers}-{i}"))
                    .build()
                    .expect("failed to start worker pool"),
            )
        })
        .clone()
}

/// Runs `op` inside the pool with `workers` threads. Calls made from a
/// thread that already belongs to a pool of that size run in place.
pub fn install<R: Send>(workers: usize, op: impl FnOnce() -> R + Send) -> R {
    if rayon::current_thread_index().is_some() && rayon::current_num_threads() == workers.max(1) {
        return op();
    }
    pool(workers).install(op)
}
