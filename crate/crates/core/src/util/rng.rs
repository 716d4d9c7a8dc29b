//! Seeded RNG used everywhere randomness is needed.
//!
//! All derived values (floats, bounded integers, shuffles, categorical draws)
//! are built directly on top of ChaCha8's `next_u64` with fixed algorithms, so
//! golden hashes of generated artifacts stay valid across dependency upgrades.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Clone, Debug)]
pub struct Prng(ChaCha8Rng);

impl Prng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Prng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Derive an independent stream from this seed without advancing `self`.
    /// Used to give each trajectory / worker its own generator.
    pub fn derive(seed: u64, stream: u64) -> Self {
        // splitmix64 over (seed ^ rotated stream) keeps streams decorrelated.
        let mut z = seed ^ stream.rotate_left(17) ^ 0x9e37_79b9_7f4a_7c15;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        Prng::seed_from_u64(z ^ (z >> 31))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [0, n). n must be > 0.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Fixed-point multiply; bias is negligible for the n used here and the
        // algorithm is pinned, which is what determinism requires.
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.index(i + 1);
            xs.swap(i, j);
        }
    }

    /// Draw an index from an unnormalized non-negative weight vector.
    /// Returns None if the total mass is zero.
    pub fn categorical(&mut self, weights: &[f64]) -> Option<usize> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let u = self.uniform() * total;
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return Some(i);
            }
        }
        // Float round-off can leave u == total; land on the last positive weight.
        weights.iter().rposition(|w| *w > 0.0)
    }
}
