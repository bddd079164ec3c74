//! Deterministic random substreams.
//!
//! Every random draw in an experiment comes from a ChaCha stream whose seed is
//! a stable 64-bit hash of `(base_seed, trial, domain, index)`. Adding trials,
//! beams or slots never perturbs the streams of existing ones, and results do
//! not depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent purposes a substream can be drawn for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    Scene = 1,
    RadarBeam = 2,
    Fading = 3,
    Policy = 4,
    Calibration = 5,
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash an ordered sequence of words into one seed.
pub fn hash_words(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &w| mix64(acc ^ mix64(w)))
}

/// Seed of trial `trial` under `base_seed`.
pub fn trial_seed(base_seed: u64, trial: u64) -> u64 {
    hash_words(&[base_seed, trial])
}

/// Handle for deriving substreams of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    seed: u64,
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn for_trial(base_seed: u64, trial: u64) -> Self {
        Self::new(trial_seed(base_seed, trial))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn substream_seed(&self, domain: Domain, index: u64) -> u64 {
        hash_words(&[self.seed, domain as u64, index])
    }

    pub fn rng(&self, domain: Domain, index: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.substream_seed(domain, index))
    }
}
