//! Deterministic random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed and positioned
//! on a 64-bit stream id, so `(seed, stream)` pins the whole sample sequence
//! independently of platform or thread scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Name of the generator, recorded in run manifests.
pub const GENERATOR: &str = "ChaCha8 (rand_chacha 0.9), seed_from_u64 + set_stream";

/// Stream ids shared by the benchmark and the command-line pipeline.
pub const SCAN_STREAM: u64 = 1;
pub const SYNTH_STREAM: u64 = 2;
pub const ASSET_STREAM: u64 = 3;
pub const TRAIN_STREAM: u64 = 4;

/// Trials and success probability of the object-count law.
pub const OBJECT_COUNT_TRIALS: u32 = 20;
pub const OBJECT_COUNT_P: f64 = 0.3;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A child stream derived from this stream's seed; used to give nested
    /// work units (e.g. one training run per seed) their own sequences.
    pub fn derive(&self, salt: u64) -> RngStream {
        let mixed = self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
        RngStream::new(mixed, self.stream)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n`.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Draws `G ~ Binomial(20, 0.3)`.
pub fn sample_object_count(rng: &mut RngStream) -> u32 {
    sample_binomial(rng, OBJECT_COUNT_TRIALS, OBJECT_COUNT_P)
}

/// Binomial draw as a count of Bernoulli successes.
pub fn sample_binomial(rng: &mut RngStream, trials: u32, p: f64) -> u32 {
    (0..trials).filter(|_| rng.next_f64() < p).count() as u32
}

/// Uniform draw in `[lo, hi)`.
pub fn sample_uniform(rng: &mut RngStream, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidRange { lo, hi });
    }
    let v = lo + (hi - lo) * rng.next_f64();
    // lo + (hi - lo) * u can round up to hi for u close to 1.
    Ok(if v >= hi { lo.max(hi.next_down()) } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_zero_objects_matches_binomial_pmf() {
        // 0.7^20 by repeated multiplication.
        let p0: f64 = (0..20).fold(1.0, |acc, _| acc * 0.7);
        assert!((p0 - 7.979e-4).abs() < 1e-6);
    }

    #[test]
    fn object_count_mean_and_range() {
        let mut rng = RngStream::new(1, 0);
        let n = 1_000_000;
        let mut sum = 0u64;
        for _ in 0..n {
            let g = sample_object_count(&mut rng);
            assert!(g <= 20);
            sum += g as u64;
        }
        let mean = sum as f64 / n as f64;
        assert!((5.98..=6.02).contains(&mean), "mean {mean}");
    }

    #[test]
    fn object_count_zero_frequency() {
        let mut rng = RngStream::new(3, 9);
        let n = 1_000_000;
        let zeros = (0..n).filter(|_| sample_object_count(&mut rng) == 0).count();
        let freq = zeros as f64 / n as f64;
        // binomial sd of the frequency at n = 1e6 is ~2.8e-5
        assert!((freq - 7.979e-4).abs() < 1.5e-4, "freq {freq}");
    }

    #[test]
    fn determinism() {
        let mut a = RngStream::new(42, 7);
        let mut b = RngStream::new(42, 7);
        let xs: Vec<u32> = (0..100).map(|_| sample_object_count(&mut a)).collect();
        let ys: Vec<u32> = (0..100).map(|_| sample_object_count(&mut b)).collect();
        assert_eq!(xs, ys);
        let mut c = RngStream::new(42, 8);
        let zs: Vec<u32> = (0..100).map(|_| sample_object_count(&mut c)).collect();
        assert_ne!(xs, zs);
    }

    #[test]
    fn uniform_mean_and_containment() {
        let mut rng = RngStream::new(5, 0);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_uniform(&mut rng, 1.0, 7.0).unwrap()).sum::<f64>() / n as f64;
        assert!((3.99..=4.01).contains(&mean), "mean {mean}");
        for _ in 0..100_000 {
            let v = sample_uniform(&mut rng, 0.0, 360.0).unwrap();
            assert!((0.0..360.0).contains(&v));
        }
    }

    #[test]
    fn uniform_degenerate_width() {
        let mut rng = RngStream::new(5, 0);
        let v = sample_uniform(&mut rng, 0.0, f64::EPSILON).unwrap();
        assert!(v.abs() <= f64::EPSILON);
    }

    #[test]
    fn uniform_bad_range() {
        let mut rng = RngStream::new(5, 0);
        assert!(matches!(sample_uniform(&mut rng, 1.0, 1.0), Err(Error::InvalidRange { .. })));
        assert!(sample_uniform(&mut rng, 2.0, 1.0).is_err());
    }
}
