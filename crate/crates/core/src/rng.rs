//! Seeded random source shared by sampling, crossover, mutation and noise.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Deterministic random stream. Two sources built from the same seed yield
/// identical draws on every platform.
#[derive(Debug, Clone)]
pub struct RandomSource(ChaCha8Rng);

impl RandomSource {
    pub fn from_seed(seed: u64) -> Self {
        RandomSource(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn int_inclusive(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        self.0.random_range(lo..=hi)
    }

    /// Uniform index in `[0, n)`. `n` must be non-zero.
    pub fn index(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    /// Bernoulli trial. Always consumes one draw so the stream position does
    /// not depend on `p`.
    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Gaussian draw. A zero or non-finite `stddev` returns `mean` without
    /// consuming the stream.
    pub fn normal(&mut self, mean: f64, stddev: f64) -> f64 {
        if !(stddev.is_finite() && stddev > 0.0) {
            return mean;
        }
        match Normal::new(mean, stddev) {
            Ok(dist) => dist.sample(&mut self.0),
            Err(_) => mean,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
}
