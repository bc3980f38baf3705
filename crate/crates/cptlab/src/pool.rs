//! Order-preserving parallel map over a fixed number of worker threads.

use rayon::prelude::*;

/// Applies `f` to every item using up to `jobs` threads. Results come back
/// in item order whatever the completion order.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let jobs = jobs.max(1).min(items.len());
    let sequential = || items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    if jobs <= 1 {
        return sequential();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()),
        Err(_) => sequential(),
    }
}
