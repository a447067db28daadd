use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Seeded pseudorandom stream.
///
/// Backed by ChaCha8, whose output is specified independently of platform
/// and word size, so a given seed yields the same sequence everywhere.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Rayleigh draw by inversion: `scale * sqrt(-2 ln(1 - u))`.
    pub fn rayleigh(&mut self, scale: f64) -> f64 {
        let u = self.next_f64();
        scale * (-2.0 * (1.0 - u).ln()).sqrt()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}

/// Derives an independent sub-stream seed from a base seed and a tag
/// (splitmix64 finalizer).
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RandomStream::new(42);
        let mut b = RandomStream::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_f64().to_bits(), b.next_f64().to_bits());
        }
        assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
    }

    #[test]
    fn different_seeds_differ() {
        let mut a = RandomStream::new(1);
        let mut b = RandomStream::new(2);
        assert_ne!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn frozen_first_draws() {
        // Pins the generator so an upstream change in stream layout is caught.
        let mut a = RandomStream::new(0);
        assert_eq!(a.next_u64(), 0xb585_f767_a79a_3b6c);
        assert_eq!(a.next_u64(), 0x7746_a55f_bad8_c037);
    }

    #[test]
    fn rayleigh_mean() {
        let mut rng = RandomStream::new(3);
        let n = 200_000;
        let mean = (0..n).map(|_| rng.rayleigh(1.0)).sum::<f64>() / n as f64;
        let expected = (std::f64::consts::PI / 2.0).sqrt();
        // sd of Rayleigh(1) is sqrt(2 - pi/2) ~ 0.655
        assert!((mean - expected).abs() < 5.0 * 0.655 / (n as f64).sqrt());
    }

    #[test]
    fn derived_seeds_are_distinct() {
        assert_ne!(derive_seed(5, 0), derive_seed(5, 1));
        assert_eq!(derive_seed(5, 3), derive_seed(5, 3));
    }
}
