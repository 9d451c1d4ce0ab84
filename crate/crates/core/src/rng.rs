//! Deterministic random streams.
//!
//! Every stochastic operation in the library draws from an [`RngStream`]
//! passed in by the caller. A stream is fully determined by the seed words
//! used to create it, so identical configurations reproduce identical
//! numbers on any platform. Callers split independent purposes (data
//! generation, critical-value simulation, ...) into separate streams by
//! deriving them with distinct tag words.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Purpose tag for dataset generation streams.
pub const PURPOSE_DATA: u64 = 0x01;
/// Purpose tag for critical-value simulation streams.
pub const PURPOSE_QUANTILE: u64 = 0x02;

/// A seed-addressable, platform-independent random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    inner: ChaCha12Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    /// Stream identified by a bare seed.
    pub fn from_seed(seed: u64) -> Self {
        Self::from_parts(seed, &[])
    }

    /// Stream identified by a seed plus up to three tag words
    /// (e.g. purpose, repetition index, scenario discriminator).
    pub fn from_parts(seed: u64, tags: &[u64]) -> Self {
        assert!(tags.len() <= 3, "at most three tag words");
        let mut words = [0u64; 4];
        words[0] = seed;
        for (slot, tag) in words[1..].iter_mut().zip(tags) {
            *slot = *tag;
        }
        let mut bytes = [0u8; 32];
        for (chunk, word) in bytes.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Self {
            inner: ChaCha12Rng::from_seed(bytes),
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }

    /// Standard normal draw (Marsaglia polar method; the second variate of
    /// each accepted pair is cached, so draws stay cheap and the stream
    /// state still determines the output completely).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = crate::float::sqrt(-2.0 * crate::float::ln(s) / s);
                self.spare_normal = Some(v * f);
                return u * f;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_parts_same_stream() {
        let mut a = RngStream::from_parts(7, &[PURPOSE_DATA, 3, 0]);
        let mut b = RngStream::from_parts(7, &[PURPOSE_DATA, 3, 0]);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn different_tags_decorrelate() {
        let mut a = RngStream::from_parts(7, &[PURPOSE_DATA, 3]);
        let mut b = RngStream::from_parts(7, &[PURPOSE_QUANTILE, 3]);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn normal_moments() {
        let mut rng = RngStream::from_seed(42);
        let n = 200_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n {
            let z = rng.standard_normal();
            sum += z;
            sumsq += z * z;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
}
