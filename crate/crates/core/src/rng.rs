//! Counter-based random streams.
//!
//! A stream is a ChaCha12 keystream keyed by `(master_seed, stream)` and
//! positioned on the 64-bit ChaCha stream `substream`. Distinct keys give
//! independent streams, and a stream can be rebuilt from its ids at any time,
//! so replicas draw the same numbers regardless of scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::Scalar;

/// Substream used for Markov-chain transitions.
pub const SUBSTREAM_DYNAMICS: u64 = 0;
/// Substream used to draw initial conditions.
pub const SUBSTREAM_INIT: u64 = 1;

#[derive(Clone, Debug)]
pub struct RandomStream {
    rng: ChaCha12Rng,
    stream: u64,
    substream: u64,
}

impl RandomStream {
    pub fn new(master_seed: u64, stream: u64) -> Self {
        Self::with_substream(master_seed, stream, SUBSTREAM_DYNAMICS)
    }

    pub fn with_substream(master_seed: u64, stream: u64, substream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&stream.to_le_bytes());
        key[16..24].copy_from_slice(b"cplhmc01");
        let mut rng = ChaCha12Rng::from_seed(key);
        rng.set_stream(substream);
        Self {
            rng,
            stream,
            substream,
        }
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    pub fn substream_id(&self) -> u64 {
        self.substream
    }

    /// One standard normal variate.
    #[inline]
    pub fn normal<S: Scalar>(&mut self) -> S {
        let z: f64 = self.rng.sample(StandardNormal);
        S::lit(z)
    }

    /// Uniform variate on `[0, 1)`.
    #[inline]
    pub fn uniform<S: Scalar>(&mut self) -> S {
        let u: f64 = self.rng.random();
        S::lit(u)
    }

    pub fn fill_normal<S: Scalar>(&mut self, out: &mut [S]) {
        for v in out {
            *v = self.normal();
        }
    }

    pub fn normal_vec<S: Scalar>(&mut self, dim: usize) -> Vec<S> {
        let mut v = vec![S::zero(); dim];
        self.fill_normal(&mut v);
        v
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
