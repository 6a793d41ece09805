//! Deterministic parallel replication.
//!
//! Replication `i` always draws from `base.child(i)` and results are returned
//! in index order, so output does not depend on the number of worker threads.

use rayon::prelude::*;

use crate::error::{RcmError, Result};
use crate::rng::RngStream;

/// Run `f(i, stream_i)` for `i in 0..reps` on the current rayon pool.
pub fn replicate<T, F>(reps: usize, base: &RngStream, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, RngStream) -> T + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|i| f(i, base.child(i as u64)))
        .collect()
}

/// Fallible variant of [`replicate`]; returns the lowest-index error.
pub fn try_replicate<T, F>(reps: usize, base: &RngStream, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, RngStream) -> Result<T> + Sync,
{
    replicate(reps, base, f).into_iter().collect()
}

/// Run `op` inside a dedicated pool with `workers` threads (`0` = rayon default).
pub fn with_workers<T: Send, F: FnOnce() -> T + Send>(workers: usize, op: F) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RcmError::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(op))
}
