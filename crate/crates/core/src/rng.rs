//! Counter-based random streams.
//!
//! A [`RandomSource`] names a ChaCha8 keystream by `(seed, stream)`. Every draw
//! is a pure function of `(seed, stream, word position)`, so work can be split
//! across threads by handing each unit its own stream id.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

/// Purpose tags occupying the top byte of a derived stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamPurpose {
    Truth = 1,
    Init = 2,
    Propagate = 3,
    PredictNoise = 4,
    Resample = 5,
    Particle = 6,
    Misc = 7,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Stream id for `(purpose, step, index)`; step and index get 24 and 32 bits.
    pub fn derive(seed: u64, purpose: StreamPurpose, step: usize, index: usize) -> Self {
        let id = ((purpose as u64) << 56) | (((step as u64) & 0xFF_FFFF) << 32) | (index as u64 & 0xFFFF_FFFF);
        Self::new(seed, id)
    }

    pub fn child(&self, purpose: StreamPurpose, step: usize, index: usize) -> Self {
        Self::derive(self.seed, purpose, step, index)
    }

    /// Generator positioned at the first draw of this stream.
    pub fn rng(&self) -> StreamRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(self.stream);
        StreamRng { inner }
    }

    /// Generator positioned at 32-bit word `index` of this stream.
    pub fn rng_at(&self, index: u128) -> StreamRng {
        let mut r = self.rng();
        r.inner.set_word_pos(index);
        r
    }
}

/// A positioned generator over one stream.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn word_pos(&self) -> u128 {
        self.inner.get_word_pos()
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
