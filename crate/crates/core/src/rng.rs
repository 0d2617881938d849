//! Seeded, splittable random streams.
//!
//! Every stream is identified by a `(seed, stream_index)` pair and is backed
//! by ChaCha8 with the stream index mapped onto ChaCha's native stream
//! counter. Two streams with the same pair produce the same sequence; streams
//! with different indices never overlap. Trial `i` of any estimator draws from
//! stream `i`, so results do not depend on how trials are scheduled.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_index: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_index);
        RngStream {
            seed,
            stream_index,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Uniform draw on `(0, 1]`, safe to feed into `ln`.
    #[inline]
    pub fn open_unit(&mut self) -> f64 {
        // 53 random mantissa bits, shifted off zero.
        let bits = self.inner.next_u64() >> 11;
        (bits as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// Derives a child seed from a parent seed and a tag (SplitMix64 finalizer).
///
/// Used to give independent sub-experiments (moments, Monte-Carlo, bootstrap)
/// their own seed space without the caller juggling constants.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
