//! Counter-based pseudo-random words.
//!
//! Word `i` of the stream for seed `s` is `mix64(s + (i + 1)·γ)` with
//! `γ = 0x9E3779B97F4A7C15` and `mix64` the SplitMix64 finalizer, all
//! arithmetic wrapping mod 2^64. This is exactly the SplitMix64 output
//! sequence, indexed by position. The algorithm is frozen: sampled streams and
//! campaign results depend on it bit for bit.

use num_bigint::BigUint;
use num_traits::Zero;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer. A bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample seed for campaign sample `index` under `base`.
///
/// Injective in `index` for a fixed `base`: it is a composition of bijections.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index.wrapping_add(GAMMA)))
}

#[derive(Clone, Debug)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed, counter: 0 }
    }

    /// Word at an absolute position, independent of the cursor.
    pub fn word_at(seed: u64, index: u64) -> u64 {
        mix64(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA)))
    }

    pub fn next_u64(&mut self) -> u64 {
        let w = Self::word_at(self.seed, self.counter);
        self.counter = self.counter.wrapping_add(1);
        w
    }

    /// Uniform integer in `[0, range)` by rejection; `range` must be nonzero.
    pub fn below_u64(&mut self, range: u64) -> u64 {
        debug_assert!(range > 0);
        // Accept x < zone, where zone is the largest multiple of range <= 2^64.
        let zone = (1u128 << 64) - ((1u128 << 64) % range as u128);
        loop {
            let x = self.next_u64();
            if (x as u128) < zone {
                return x % range;
            }
        }
    }

    /// Uniform integer in `[0, range)` for arbitrary-size ranges.
    pub fn below_big(&mut self, range: &BigUint) -> BigUint {
        debug_assert!(!range.is_zero());
        let words = range.bits().div_ceil(64) as usize;
        let span = BigUint::from(1u8) << (64 * words);
        let zone = &span - (&span % range);
        loop {
            let mut x = BigUint::zero();
            for _ in 0..words {
                x = (x << 64u32) | BigUint::from(self.next_u64());
            }
            if x < zone {
                return x % range;
            }
        }
    }
}
