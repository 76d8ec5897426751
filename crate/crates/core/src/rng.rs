//! Portable seeded randomness.
//!
//! Every random decision in the pipeline draws from [`SeededRng`], a
//! SplitMix64 stream whose state starts at the user seed. Only two
//! reductions are used on top of the raw `u64` stream, so any other
//! implementation can reproduce a selection bit-for-bit:
//!
//! * [`SeededRng::below`]: uniform integer in `[0, n)` by rejection.
//!   Draws `x`; rejects while `x < (2^64 - n) mod n`; returns `x mod n`.
//! * [`SeededRng::unit_f64`]: `(x >> 11) * 2^-53`, uniform in `[0, 1)`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: SplitMix64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: SplitMix64::seed_from_u64(seed),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) has no valid outcome");
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % n;
            }
        }
    }

    #[inline]
    pub fn below_usize(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    #[inline]
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
