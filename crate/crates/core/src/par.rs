//! Data-parallel map facade.
//!
//! With the default `parallel` feature the indexed maps fan out over a
//! rayon pool; without it they fall back to a plain sequential loop.
//! Results are collected in index order either way, so any computation
//! that is deterministic per index is bitwise independent of worker
//! count and of whether the feature is enabled.

/// Map `f` over `0..n`, in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, in parallel when the `parallel` feature is on.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    map_indexed_serial(n, f)
}

/// Always-sequential counterpart, kept available for benchmarking the
/// two execution strategies against each other.
pub fn map_indexed_serial<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}
