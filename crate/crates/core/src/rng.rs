//! Seed plumbing. Every random draw in the crate comes from a ChaCha stream
//! derived from a user seed plus a stream tag, so independent consumers never
//! share state and results do not depend on call order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(mix64(seed) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

pub fn stream(seed: u64, tag: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag))
}

/// Deterministic value in [-1, 1) from a pair of integers.
pub fn hash_unit(a: u64, b: u64) -> f64 {
    let h = mix64(a.wrapping_mul(0x2545_F491_4F6C_DD1D) ^ mix64(b));
    (h >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

pub mod tags {
    pub const ACTIONS: u64 = 1;
    pub const ACTUATION: u64 = 2;
    pub const TRACKER: u64 = 3;
    pub const SHAKE: u64 = 4;
    pub const DROPOUT: u64 = 5;
    pub const DECOY: u64 = 6;
    pub const LOOSE: u64 = 7;
    pub const SCENE: u64 = 8;
    pub const REPLAY: u64 = 9;
    pub const MI_NOISE: u64 = 10;
    pub const KMEANS: u64 = 11;
    pub const BROKEN: u64 = 12;
}
