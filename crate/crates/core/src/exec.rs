//! Index-ordered data-parallel maps with a sequential fallback.
//!
//! Work items receive their index and derive their own random streams from
//! it, so the output of [`map_indexed`] is identical under every schedule and
//! thread count.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Schedule {
    Sequential,
    Parallel,
}

impl Default for Schedule {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Schedule::Parallel
        } else {
            Schedule::Sequential
        }
    }
}

/// Evaluates `f(0), …, f(n−1)` and returns the results in index order.
pub fn map_indexed<T, F>(n: usize, schedule: Schedule, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match schedule {
        #[cfg(feature = "parallel")]
        Schedule::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Like [`map_indexed`] for fallible work items; the first error by index wins.
pub fn try_map_indexed<T, E, F>(n: usize, schedule: Schedule, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indexed(n, schedule, f).into_iter().collect()
}

/// Runs `f` on a pool with `workers` threads. Without the `parallel`
/// feature, or with `workers == 0`, `f` runs on the calling thread.
pub fn with_workers<R, F>(workers: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if workers > 0 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                return pool.install(f);
            }
        }
    }
    let _ = workers;
    f()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules_agree() {
        let seq = map_indexed(1000, Schedule::Sequential, |i| (i as f64).sqrt());
        let par = map_indexed(1000, Schedule::Parallel, |i| (i as f64).sqrt());
        assert_eq!(seq, par);
        let pooled = with_workers(3, || map_indexed(1000, Schedule::Parallel, |i| (i as f64).sqrt()));
        assert_eq!(seq, pooled);
    }

    #[test]
    fn first_error_by_index() {
        let r: Result<Vec<usize>, usize> =
            try_map_indexed(100, Schedule::Parallel, |i| if i % 7 == 3 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(3));
    }
}
