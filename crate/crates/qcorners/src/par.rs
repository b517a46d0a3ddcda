//! Tiny parallel/sequential switch.
//!
//! Every data-parallel loop in the crate goes through `map_indexed`, which maps
//! `0..n` to a `Vec` in index order. With the `parallel` feature the map runs on
//! rayon; without it the same closure runs sequentially. Callers always reduce
//! the returned `Vec` in a fixed order, so results are identical for any thread
//! count (and for the sequential build).

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}
