//! Order-preserving fan-out. With the `std` feature work items run on the
//! rayon pool; results are always collected in index order, so callers see
//! the same output for any worker count.

use alloc::vec::Vec;

#[cfg(feature = "std")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "std"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
