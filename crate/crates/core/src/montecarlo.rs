//! Deterministic sharding of Monte Carlo trials.
//!
//! Trials are split into a fixed number of shards, each driven by its own
//! stream of the seeded generator, and shard results are merged in shard
//! order. The result therefore depends only on (seed, trials), never on the
//! number of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::ff_linalg::{stream_rng, SampleRng};

pub const SHARDS: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

/// Trial counts per shard; the first `trials % SHARDS` shards get one extra.
pub fn shard_sizes(trials: u64) -> Vec<u64> {
    let base = trials / SHARDS;
    let extra = trials % SHARDS;
    (0..SHARDS).map(|s| base + u64::from(s < extra)).collect()
}

/// Runs `per_shard(rng, count)` on every shard in parallel, returning results in shard order.
pub fn map_shards<T, F>(trials: u64, seed: u64, per_shard: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut SampleRng, u64) -> T + Sync,
{
    shard_sizes(trials)
        .into_par_iter()
        .enumerate()
        .map(|(s, count)| {
            let mut rng = stream_rng(seed, s as u64);
            per_shard(&mut rng, count)
        })
        .collect()
}

/// Mean and standard error of a scalar statistic over `trials` draws.
pub fn estimate<F>(trials: u64, seed: u64, draw: F) -> Estimate
where
    F: Fn(&mut SampleRng) -> f64 + Sync,
{
    let sums = map_shards(trials, seed, |rng, count| {
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..count {
            let x = draw(rng);
            s += x;
            s2 += x * x;
        }
        (s, s2)
    });
    let (s, s2) = sums.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    finish(s, s2, trials)
}

pub fn finish(sum: f64, sum_sq: f64, trials: u64) -> Estimate {
    if trials == 0 {
        return Estimate { mean: f64::NAN, stderr: f64::NAN, trials };
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = if trials > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Estimate { mean, stderr: (var / n).sqrt(), trials }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn shard_sizes_cover_all_trials() {
        assert_eq!(shard_sizes(1000).iter().sum::<u64>(), 1000);
        assert_eq!(shard_sizes(3).iter().sum::<u64>(), 3);
    }

    #[test]
    fn independent_of_thread_count() {
        let f = |rng: &mut SampleRng| rng.gen::<f64>();
        let a = estimate(10_000, 5, f);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| estimate(10_000, 5, f));
        assert_eq!(a, b);
    }
}
