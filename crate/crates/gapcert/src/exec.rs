//! Execution-strategy switch for the enumeration-heavy verifiers.
//!
//! Every hot loop in the crate is written against this enum so the same code
//! path can run sequentially or fan out over a rayon pool. With the `parallel`
//! feature disabled the parallel arm degrades to the sequential one, keeping
//! call sites identical.

/// How enumeration loops should run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    /// Single-threaded, deterministic iteration order.
    Sequential,
    /// Data-parallel via rayon's global pool (or sequential if the `parallel`
    /// feature is compiled out).
    #[default]
    Parallel,
}

impl Exec {
    /// Sums `f(i)` over `lo..hi` of a u64 range mapped through `f`.
    pub fn sum_range<T, F>(self, lo: u64, hi: u64, f: F) -> T
    where
        T: Send + std::iter::Sum<T>,
        F: Fn(u64) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            if self == Exec::Parallel {
                use rayon::prelude::*;
                return (lo..hi).into_par_iter().map(&f).sum();
            }
        }
        (lo..hi).map(f).sum()
    }

    /// First counterexample in `lo..hi`, if any. The parallel arm uses
    /// `find_first` so the reported witness is the smallest, matching the
    /// sequential arm exactly.
    pub fn find_counterexample<F>(self, lo: u64, hi: u64, f: F) -> Option<u64>
    where
        F: Fn(u64) -> bool + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            if self == Exec::Parallel {
                use rayon::prelude::*;
                return (lo..hi).into_par_iter().find_first(|&x| f(x));
            }
        }
        (lo..hi).find(|&x| f(x))
    }

    /// Maps `lo..hi` and merges per-item results with `merge`, starting from
    /// `identity` items. Deterministic for commutative-associative merges.
    pub fn map_reduce<T, F, M>(self, lo: u64, hi: u64, identity: impl Fn() -> T + Sync + Send, f: F, merge: M) -> T
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
        M: Fn(T, T) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            if self == Exec::Parallel {
                use rayon::prelude::*;
                return (lo..hi)
                    .into_par_iter()
                    .map(&f)
                    .reduce(&identity, &merge);
            }
        }
        let mut acc = identity();
        for x in lo..hi {
            acc = merge(acc, f(x));
        }
        acc
    }
}
