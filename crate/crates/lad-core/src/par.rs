//! Execution helpers: data-parallel maps with a sequential fallback, and
//! fixed-shape reductions whose result does not depend on the schedule.
//!
//! With the `parallel` feature (default) the maps run on rayon; without it
//! they run as plain loops. Because every work item draws from its own
//! substream and results are collected in index order, both modes produce
//! bit-identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f` to `0..n` and collect the results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Apply `f` to `0..n` and collect the results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Name of the active execution mode, used by benches and diagnostics.
pub fn execution_mode() -> &'static str {
    if cfg!(feature = "parallel") {
        "parallel"
    } else {
        "sequential"
    }
}

/// Sum `values[lo..hi]` by recursive halving. The reduction tree depends
/// only on the index range, so the result is bit-stable for a fixed input
/// length regardless of thread count or batching.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    fn go(v: &[f64]) -> f64 {
        if v.len() <= 8 {
            let mut acc = 0.0;
            for &x in v {
                acc += x;
            }
            acc
        } else {
            let mid = v.len() / 2;
            go(&v[..mid]) + go(&v[mid..])
        }
    }
    go(values)
}

/// Mean via [`pairwise_sum`]; returns 0.0 on empty input.
pub fn pairwise_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        pairwise_sum(values) / values.len() as f64
    }
}
