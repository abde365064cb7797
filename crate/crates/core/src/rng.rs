//! Seeded, platform-independent random number generation.
//!
//! Every random quantity in the crate is drawn from a [`SeededRng`]. The
//! generator is ChaCha8 keyed by a 64-bit seed, so a seed together with the
//! documented draw order reproduces identical values on every platform.
//! Independent consumers (initialization, error sampling, training batches)
//! take separate [`SeededRng::substream`]s of the same seed rather than
//! sharing one stream.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// A fresh generator over the ChaCha stream `stream` of the same seed.
    ///
    /// Substreams are statistically independent of each other and of the
    /// default stream (stream 0), and do not depend on how much of the
    /// parent has been consumed.
    pub fn substream(&self, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(stream);
        Self {
            seed: self.seed,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32-bit words consumed from the current stream.
    pub fn position(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal draw (ziggurat).
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Complex Gaussian with independent standard normal real and imaginary
    /// parts, drawn real part first.
    pub fn complex_normal(&mut self) -> Complex64 {
        let re = self.normal();
        let im = self.normal();
        Complex64::new(re, im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let mut a = SeededRng::new(7);
        let mut b = SeededRng::new(7);
        for _ in 0..100 {
            assert_eq!(a.normal().to_bits(), b.normal().to_bits());
        }
        assert_eq!(a.position(), b.position());
    }

    #[test]
    fn substreams_are_distinct_and_reproducible() {
        let root = SeededRng::new(3);
        let mut s1 = root.substream(1);
        let mut s2 = root.substream(2);
        let mut s1_again = SeededRng::new(3).substream(1);
        let a = s1.uniform();
        assert_ne!(a, s2.uniform());
        assert_eq!(a, s1_again.uniform());
    }
}
