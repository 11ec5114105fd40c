//! Platform-stable random source for missingness injection.
//!
//! The generator is xoshiro256++ seeded from a `u64` through SplitMix64
//! (the `seed_from_u64` expansion of `rand_xoshiro`). Every derived draw
//! is defined here on top of raw `next_u64` outputs, so manifests can be
//! reproduced by ports in other languages:
//!
//! * `unit()`: `(next_u64() >> 11) * 2^-53`, uniform on `[0, 1)`.
//! * `below(n)`: Lemire's multiply-shift with rejection, unbiased on `[0, n)`.
//! * `choose(pool, k)`: partial Fisher-Yates over the pool in its given
//!   order, swapping position `i` with `i + below(len - i)` for `i < k`;
//!   the first `k` entries are the sample.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, Clone)]
pub struct SeededRng(Xoshiro256PlusPlus);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[-1, 1)`.
    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.unit() - 1.0
    }

    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let mut m = (self.next_u64() as u128) * (n as u128);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = (self.next_u64() as u128) * (n as u128);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Samples `k` entries of `pool` without replacement (the pool is
    /// reordered in place). Returns the sample sorted ascending.
    pub fn choose(&mut self, pool: &mut [usize], k: usize) -> Vec<usize> {
        let k = k.min(pool.len());
        for i in 0..k {
            let j = i + self.below((pool.len() - i) as u64) as usize;
            pool.swap(i, j);
        }
        let mut sample = pool[..k].to_vec();
        sample.sort_unstable();
        sample
    }
}
