//! Execution mode for the data-parallel loops.
//!
//! Every reduction is split into fixed-size chunks whose partial results are
//! combined in chunk order, so the sequential and parallel paths return
//! bit-identical values. Without the `parallel` feature, [`Exec::Parallel`]
//! falls back to the sequential path.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Number of items per reduction chunk.
pub const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

fn chunk_ranges(n: usize, chunk: usize) -> Vec<Range<usize>> {
    (0..n.div_ceil(chunk))
        .map(|c| c * chunk..((c + 1) * chunk).min(n))
        .collect()
}

/// Sums `f(range)` over consecutive chunks of `0..n` in a fixed order.
pub fn chunked_sum<F>(exec: Exec, n: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync + Send,
{
    let ranges = chunk_ranges(n, CHUNK);
    let partials: Vec<f64> = map(exec, &ranges, |r| f(r.clone()));
    partials.iter().sum()
}

/// Max of `f(range)` over chunks (exact, order independent).
pub fn chunked_max<F>(exec: Exec, n: usize, f: F) -> f64
where
    F: Fn(Range<usize>) -> f64 + Sync + Send,
{
    let ranges = chunk_ranges(n, CHUNK);
    map(exec, &ranges, |r| f(r.clone()))
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Writes `out[i] = f(i)` for every index.
pub fn fill<F>(exec: Exec, out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_iter_mut()
            .with_min_len(CHUNK / 4)
            .enumerate()
            .for_each(|(i, v)| *v = f(i));
        return;
    }
    let _ = exec;
    for (i, v) in out.iter_mut().enumerate() {
        *v = f(i);
    }
}

/// Order-preserving map over a slice.
pub fn map<T, U, F>(exec: Exec, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}
