//! Seeded random number generation.
//!
//! All stochastic operations in this crate draw from [`SeededRng`], a thin
//! wrapper over ChaCha8. The stream is fully determined by the seed, so any
//! pipeline is reproducible bit for bit across runs and platforms.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform integer in `[lo, hi]` (inclusive).
    pub fn range_i32(&mut self, lo: i32, hi: i32) -> i32 {
        self.inner.random_range(lo..=hi)
    }

    /// Uniform index in `[0, n)`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Uniform float in `[0, 1)`.
    pub fn unit_f64(&mut self) -> f64 {
        self.inner.random_range(0.0..1.0)
    }

    /// Uniform float in `[lo, hi)`.
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.random_range(lo..hi)
    }

    /// Standard normal draw.
    pub fn normal_f32(&mut self) -> f32 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Draws `count` distinct indices from `[0, n)` without replacement.
    ///
    /// Partial Fisher-Yates over an index table; consumes exactly `count`
    /// draws from the stream. Result order is the selection order.
    pub fn sample_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n, "cannot sample {count} of {n} without replacement");
        let mut pool: Vec<usize> = (0..n).collect();
        let mut picked = Vec::with_capacity(count);
        for i in 0..count {
            let j = self.inner.random_range(i..n);
            pool.swap(i, j);
            picked.push(pool[i]);
        }
        picked
    }
}
