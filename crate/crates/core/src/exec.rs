//! Execution policy for the data-parallel loops.
//!
//! Every parallel loop in the crate is an indexed map whose results are
//! collected in index order and reduced sequentially afterwards, so the
//! choice of policy never changes the numbers produced.

/// Where an indexed map runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Run on the global rayon pool. Falls back to sequential when the
    /// crate is built without the `parallel` feature.
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// True when this policy will actually fan out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Maps `f` over `0..len`, returning results in index order.
    pub fn map_indexed<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Like [`map_indexed`](Self::map_indexed) for fallible work; the first
    /// error in index order is returned.
    pub fn try_map_indexed<T, E, F>(self, len: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map_indexed(len, f).into_iter().collect()
    }
}
