//! Batch execution over independent Monte Carlo tasks.
//!
//! `batch_map` fans a task function out over stream ids and returns results
//! in input order, so downstream reductions are sequential and bit-exact
//! regardless of worker count. With the `parallel` feature (default) the fan
//! out goes through rayon; without it, or via `batch_map_serial`, the loop
//! runs in place.

/// Map `f` over `0..n` tasks, returning results in task order.
#[cfg(feature = "parallel")]
pub fn batch_map<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn batch_map<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    batch_map_serial(n, f)
}

/// Sequential reference path; the benchmark suite compares this against
/// `batch_map`.
pub fn batch_map_serial<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n).map(f).collect()
}
