use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

/// Stream of doubles in `[0, 1)` drawn from splitmix64 seeded exactly by
/// `seed` (the generator state starts at `seed`).
pub struct SplitMixStream(SplitMix64);

impl SplitMixStream {
    pub fn new(seed: u64) -> Self {
        SplitMixStream(SplitMix64::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    pub fn next_f64(&mut self) -> f64 {
        splitmix64_unit_f64(self.next_u64())
    }
}

/// Maps a 64-bit word to `[0, 1)` using its top 53 bits.
pub fn splitmix64_unit_f64(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
