//! Per-run random stream derivation.
//!
//! Every `(policy, run)` cell gets its own stream seeded from
//! `mix64(master ⊕ mix64(policy) ⊕ mix64(run · φ))`, where `mix64` is the
//! SplitMix64 finalizer and `φ = 0x9E3779B97F4A7C15`. Seeds depend only on the
//! cell, never on scheduling, so results are identical for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_seed(master: u64, policy_ordinal: u64, run_index: u64) -> u64 {
    mix64(master ^ mix64(policy_ordinal) ^ mix64(run_index.wrapping_mul(GOLDEN_GAMMA)))
}

/// The generator every run draws from.
pub fn stream_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seeds for a `policies × runs` experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunPlan {
    pub master_seed: u64,
    pub policies: usize,
    pub runs: usize,
}

impl RunPlan {
    pub fn seed(&self, policy_ordinal: usize, run_index: usize) -> u64 {
        stream_seed(self.master_seed, policy_ordinal as u64, run_index as u64)
    }

    pub fn seeds(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.policies)
            .flat_map(move |p| (0..self.runs).map(move |r| (p, r, self.seed(p, r))))
    }
}
