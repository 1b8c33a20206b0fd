//! Seed-derived randomness streams.
//!
//! Every random decision in a run is drawn from a ChaCha8 stream keyed by
//! `(seed, trial, round, stage)`. The key is the little-endian concatenation
//! of the four words, so distinct tuples never share a stream and a seed
//! fully determines every trial regardless of execution order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::quantum::Basis;

pub type Stream = ChaCha8Rng;

/// Round index used for per-trial streams that are not tied to one round.
pub const TRIAL_LEVEL_ROUND: u64 = u64::MAX;

/// Which decision a stream feeds. Listed in per-round draw order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u64)]
pub enum Stage {
    Source = 0,
    NoiseA = 1,
    NoiseB = 2,
    Eve = 3,
    AliceBasis = 4,
    AliceMeasure = 5,
    BobRoles = 6,
    BobBasis = 7,
    BobMeasure = 8,
    MasterMeasure = 9,
    Disclosure = 10,
}

pub fn derive_stream(seed: u64, trial: u64, round: u64, stage: Stage) -> Stream {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([seed, trial, round, stage as u64]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// The streams belonging to one protocol round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundStreams {
    pub seed: u64,
    pub trial: u64,
    pub round: u64,
}

impl RoundStreams {
    pub fn new(seed: u64, trial: u64, round: u64) -> Self {
        RoundStreams { seed, trial, round }
    }

    pub fn stream(&self, stage: Stage) -> Stream {
        derive_stream(self.seed, self.trial, self.round, stage)
    }
}

/// Z or X with probability 1/2 each.
pub fn uniform_basis<R: Rng + ?Sized>(rng: &mut R) -> Basis {
    if rng.random_bool(0.5) {
        Basis::X
    } else {
        Basis::Z
    }
}

/// Uniform draw in `[0, 1)`.
pub fn unit_draw<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}
