//! Seedable random streams.
//!
//! Every stochastic operation in the crate takes an explicit `u64` seed and
//! draws from a [`ChaCha8Rng`]. Independent consumers that share one
//! user-facing seed (motion noise, receiver noise, Monte Carlo workers) each
//! get their own stream through [`stream_rng`], which mixes the seed and a
//! stream identifier with the SplitMix64 finaliser before seeding ChaCha8.
//! Same `(seed, stream)` gives the same sequence on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream identifiers used inside the crate.
pub mod streams {
    pub const MISALIGNMENT_SAMPLES: u64 = 0x4d53;
    pub const MOTION_AZ: u64 = 0x415a;
    pub const MOTION_EL: u64 = 0x454c;
    pub const RECEIVER_NOISE: u64 = 0x4e4f;
    /// Seed of the reference (baseline) capture made alongside a run.
    pub const BASELINE: u64 = 0x424c;
}

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of sub-stream `stream` from a user seed.
pub fn split_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

/// A generator for sub-stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(split_seed(seed, stream))
}
