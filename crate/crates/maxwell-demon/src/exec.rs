//! Batch evaluation strategy.
//!
//! Every batch entry point in this crate maps a pure function over an index
//! range and folds the results sequentially. With the `parallel` feature
//! (default) the map runs on the rayon pool; without it the same map runs on
//! the calling thread. Work items derive their randomness from
//! `(seed, index)`, never from shared state, so the two modes produce
//! identical results and neither depends on scheduling.

/// Active strategy, for labeling reports and benchmarks.
pub const MODE: &str = if cfg!(feature = "parallel") {
    "parallel"
} else {
    "sequential"
};

#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential reference path with the same contract as [`map_indexed`];
/// benchmarks compare the two.
pub fn map_indexed_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let square = |i: usize| (i * i) as u64;
        assert_eq!(map_indexed(100, square), map_indexed_seq(100, square));
    }
}
