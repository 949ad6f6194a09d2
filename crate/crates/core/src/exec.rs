//! Order-preserving data-parallel helpers.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool;
//! without it, or with [`Execution::Sequential`], everything runs on the
//! calling thread. Results are collected in input order either way, so the
//! output never depends on scheduling.

use serde::{Deserialize, Serialize};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "SUPEREXP_WORKERS";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// `true` when work will actually be distributed over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

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

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
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
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f` inside a pool of `workers` threads. Falls back to a direct call
/// when the pool cannot be built or the `parallel` feature is off.
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if let Some(n) = workers {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            return pool.install(f);
        }
    }
    let _ = workers;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let items: Vec<u64> = (0..1000).collect();
        let par = Execution::Parallel.map(&items, |x| x * x);
        let seq = Execution::Sequential.map(&items, |x| x * x);
        assert_eq!(par, seq);
        assert_eq!(par[999], 999 * 999);
        assert_eq!(Execution::Parallel.map_range(5, |i| i), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn pool_runs_closure() {
        let v = with_workers(Some(2), || Execution::Parallel.map_range(10, |i| i + 1));
        assert_eq!(v.iter().sum::<usize>(), 55);
    }
}
