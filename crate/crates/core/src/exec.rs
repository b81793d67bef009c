//! Execution strategy for the data-parallel sweeps.
//!
//! With the `parallel` feature (on by default) bulk work fans out over the
//! rayon pool; without it every strategy runs sequentially. Every reduction
//! used here is associative and commutative, so results are identical
//! under either strategy.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Whether this strategy actually runs on the thread pool in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Order-preserving map.
    pub fn map<T, R, F>(self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.into_par_iter().map(f).collect();
        }
        items.into_iter().map(f).collect()
    }

    /// Map each index of `0..len` and fold the results with `merge`.
    pub fn map_reduce<R, F, M, I>(self, len: u64, identity: I, f: F, merge: M) -> R
    where
        R: Send,
        I: Fn() -> R + Sync + Send,
        F: Fn(u64) -> R + Sync + Send,
        M: Fn(R, R) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..len).into_par_iter().map(f).reduce(&identity, &merge);
        }
        (0..len).map(f).fold(identity(), merge)
    }
}
