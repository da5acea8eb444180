//! Sequential versus data-parallel execution of independent work items.
//!
//! With the `parallel` feature (on by default) [`Strategy::Parallel`] runs on
//! the rayon global pool. Without it, `Parallel` silently degrades to the
//! sequential path, so callers never need their own `cfg` gates.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Sequential,
    Parallel,
}

impl Default for Strategy {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Strategy::Parallel
        } else {
            Strategy::Sequential
        }
    }
}

impl Strategy {
    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Strategy::Parallel
    }

    /// Number of items worth evaluating per batch when scanning with
    /// early exit.
    pub fn batch_width(self) -> usize {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return rayon::current_num_threads().max(1);
        }
        1
    }

    /// Map `f` over `0..n`, preserving index order in the output.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Map `f` over a slice, preserving order.
    pub fn map_slice<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Fold `0..n` in chunks of `chunk`, combining the per-chunk results with
    /// `reduce`. `reduce` must be associative; chunk results are combined in
    /// index order so non-commutative reductions stay deterministic.
    pub fn fold_chunks<R, F, G>(self, n: usize, chunk: usize, identity: R, f: F, reduce: G) -> R
    where
        R: Send + Sync + Clone,
        F: Fn(std::ops::Range<usize>) -> R + Sync + Send,
        G: Fn(R, R) -> R + Sync + Send,
    {
        let chunk = chunk.max(1);
        let n_chunks = n.div_ceil(chunk);
        let parts = self.map_range(n_chunks, |c| f(c * chunk..((c + 1) * chunk).min(n)));
        parts.into_iter().fold(identity, reduce)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_strategies_agree() {
        for s in [Strategy::Sequential, Strategy::Parallel] {
            assert_eq!(s.map_range(5, |i| i * i), vec![0, 1, 4, 9, 16]);
            let total = s.fold_chunks(1000, 64, 0usize, |r| r.sum::<usize>(), |a, b| a + b);
            assert_eq!(total, 499_500);
        }
    }
}
