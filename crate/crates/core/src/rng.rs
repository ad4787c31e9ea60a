//! Keyed random streams.
//!
//! Every trial draws from its own ChaCha8 stream. The stream key is derived
//! from `(master seed, point index)` and the ChaCha stream id is the trial
//! index, so the draws of a trial never depend on which thread ran it or on
//! how many trials ran before it.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer, used to decorrelate nearby seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl SimRng {
    /// Stream `stream` of the generator keyed by `seed`.
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            inner,
            seed,
            stream,
        }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    /// Stream for trial `trial` of grid point `point` under `master`.
    pub fn for_trial(master: u64, point: u64, trial: u64) -> Self {
        Self::new(mix64(master ^ mix64(point)), trial)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Independent child stream, used when a procedure needs a fresh source
    /// (e.g. a wrapper drawing a permutation before delegating).
    pub fn fork(&mut self) -> SimRng {
        let seed = mix64(self.next_u64());
        SimRng::new(seed, self.stream)
    }
}

impl RngCore for SimRng {
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
