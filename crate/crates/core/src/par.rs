//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) these run on rayon; without it
//! they degrade to plain iterators. Both paths preserve input order, so
//! callers get identical output either way. Reductions that need more
//! than order preservation must use a total order (see `fit_weights`).

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Order-preserving map over a slice.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Order-preserving map over an index range.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Minimum of `f(i)` under a total order. `cmp` must be a total order on
/// the mapped values for the result to be independent of split points.
pub fn min_by_range<R, F, C>(n: usize, f: F, cmp: C) -> Option<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
    C: Fn(&R, &R) -> std::cmp::Ordering + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).min_by(cmp)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).min_by(cmp)
    }
}
