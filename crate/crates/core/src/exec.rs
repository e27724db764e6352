//! Dispatch for the data-parallel sweeps.
//!
//! With the `parallel` feature (default) the per-cell work fans out over
//! rayon; without it everything runs on one thread. Reductions are maxima
//! under a total order, so the result is identical regardless of schedule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `eval` over `0..n` and keep the greatest result under `Ord`.
///
/// `eval` must be pure; ties are broken by the total order itself, so the
/// outcome does not depend on the reduction schedule.
pub fn max_indexed<T, F>(n: usize, eval: F) -> Option<T>
where
    T: Ord + Send,
    F: Fn(usize) -> Option<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().filter_map(eval).max()
    }
    #[cfg(not(feature = "parallel"))]
    {
        max_indexed_seq(n, eval)
    }
}

/// Sequential variant of [`max_indexed`]; the fallback when the `parallel`
/// feature is off, kept public so the benches can compare the two paths.
pub fn max_indexed_seq<T, F>(n: usize, eval: F) -> Option<T>
where
    T: Ord,
    F: Fn(usize) -> Option<T>,
{
    (0..n).filter_map(eval).max()
}

/// Map `eval` over `0..n`, collecting results in index order.
pub fn map_indexed<T, F>(n: usize, eval: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(eval).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(eval).collect()
    }
}
