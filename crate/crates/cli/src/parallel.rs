//! Deterministic worker-pool helpers.
//!
//! All parallelism in this binary follows one pattern: split a fixed index
//! range across threads, evaluate a pure per-index closure (every index
//! carries its own derived seed), and collect results back in index order.
//! The output is therefore bitwise independent of the thread count and of
//! scheduling, which is what makes the determinism contract testable.

use rayon::iter::{IntoParallelIterator, ParallelIterator};
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::RunError;

/// Environment variable consulted when `--threads` is not given.
pub const THREADS_ENV: &str = "SPARSE_DETECT_THREADS";

/// Resolves the worker count: the CLI flag wins, then the environment
/// variable, then the automatic choice (one worker per logical CPU).
/// Returns 0 for "automatic", matching the pool builder's convention.
pub fn thread_count(flag: Option<usize>) -> Result<usize, RunError> {
    if let Some(k) = flag {
        if k == 0 {
            return Err(RunError::usage("--threads must be at least 1"));
        }
        return Ok(k);
    }
    match std::env::var(THREADS_ENV) {
        Ok(text) => {
            let k: usize = text.trim().parse().map_err(|_| {
                RunError::usage(format!("{THREADS_ENV} must be a positive integer, got {text:?}"))
            })?;
            if k == 0 {
                return Err(RunError::usage(format!("{THREADS_ENV} must be at least 1")));
            }
            Ok(k)
        }
        Err(_) => Ok(0),
    }
}

/// Builds the worker pool for one command invocation.
pub fn build_pool(flag: Option<usize>) -> Result<ThreadPool, RunError> {
    let workers = thread_count(flag)?;
    ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::failure(anyhow::anyhow!("cannot build worker pool: {e}")))
}

/// Evaluates `f(0), …, f(count - 1)` on the pool and returns the results in
/// index order. `f` must be pure in its index for the determinism contract
/// to hold.
pub fn map_indexed<T, F>(pool: &ThreadPool, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    pool.install(|| (0..count).into_par_iter().map(f).collect())
}

/// Fallible variant of [`map_indexed`]; the first error aborts the sweep.
pub fn try_map_indexed<T, F>(pool: &ThreadPool, count: usize, f: F) -> anyhow::Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> anyhow::Result<T> + Sync + Send,
{
    pool.install(|| (0..count).into_par_iter().map(f).collect())
}
