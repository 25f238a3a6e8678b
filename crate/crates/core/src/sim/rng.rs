use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Identifier of the generator, recorded in every simulation report.
pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64+set_stream";

/// A `(seed, stream)` pair naming one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Stream of replica `i`, offset from this one.
    pub fn replica(&self, i: u64) -> Self {
        Self { seed: self.seed, stream: self.stream.wrapping_add(i) }
    }

    pub fn rng(&self) -> SimRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(self.stream);
        SimRng { inner }
    }
}

pub struct SimRng {
    inner: ChaCha8Rng,
}

impl SimRng {
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `(0, 1]` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential holding time with the given total rate.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -libm::log(self.uniform()) / rate
    }

    /// Uniform index in `0..n` by widening multiplication.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}
