//! Replica parallelism with results independent of the thread count.

use rayon::prelude::*;
use sepness_core::sim::RngStream;
use sepness_core::Result;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SEPNESS_THREADS";

/// Thread cap from [`THREADS_ENV`]; `None` when unset or not a positive integer.
pub fn thread_limit() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

/// Runs replica `i` on `base.replica(i)` for `i < n` and returns the outputs
/// in replica order. `threads = None` falls back to [`thread_limit`], then
/// to rayon's default.
pub fn map_replicas<T, F>(n: u64, base: &RngStream, threads: Option<usize>, task: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&RngStream) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.or_else(thread_limit).unwrap_or(0))
        .build()
        .expect("thread pool");
    pool.install(|| (0..n).into_par_iter().map(|i| task(&base.replica(i))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_values_do_not_depend_on_threads() {
        let base = RngStream::new(3, 10);
        let run = |t| map_replicas(500, &base, Some(t), |s| Ok(s.rng().next_u64())).unwrap();
        let one = run(1);
        assert_eq!(one, run(4));
        assert_eq!(one[7], base.replica(7).rng().next_u64());
    }

    #[test]
    fn first_error_in_order_wins() {
        let r: Result<Vec<u64>> = map_replicas(10, &RngStream::default(), Some(2), |s| {
            if s.stream >= 3 {
                Err(sepness_core::Error::Parameter(format!("replica {}", s.stream)))
            } else {
                Ok(0)
            }
        });
        assert!(r.is_err());
    }
}
