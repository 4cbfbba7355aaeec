//! Reproducible random streams.
//!
//! Every chain owns a ChaCha8 generator keyed from a single 64-bit seed.
//! ChaCha is a counter-based cipher, so a stream is a pure function of
//! `(key, counter)` and never depends on which thread consumed it.
//! Replicate `i` of an experiment keyed by `base_seed` uses the seed
//! `mix_seed(base_seed, i)`.
//!
//! Gaussian variates come from the ziggurat sampler of `rand_distr`
//! (`StandardNormal`); the crate versions are pinned through `Cargo.lock`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of stream `index` from `base_seed`.
///
/// `mix_seed(b, i) = splitmix64(splitmix64(b) ^ (i + 1) * GOLDEN)`.
#[inline]
pub fn mix_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(base_seed) ^ index.wrapping_add(1).wrapping_mul(GOLDEN))
}

/// Random source for a single chain.
#[derive(Debug, Clone)]
pub struct ChainRng {
    inner: ChaCha8Rng,
}

impl ChainRng {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut s = seed;
        for chunk in key.chunks_exact_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        Self {
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for z in out.iter_mut() {
            *z = self.inner.sample(StandardNormal);
        }
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Uniform point on the unit sphere of `R^d`.
    pub fn unit_vector(&mut self, out: &mut [f64]) {
        loop {
            self.fill_normal(out);
            let norm = crate::numeric::norm(out);
            if norm > 1e-12 {
                out.iter_mut().for_each(|v| *v /= norm);
                return;
            }
        }
    }
}
