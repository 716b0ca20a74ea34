//! Seed splitting.
//!
//! Every stream of randomness is derived from one 64-bit root seed as
//! `root ^ splitmix64(index)`, so a datapoint or task draws the same numbers
//! no matter which thread processes it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer, used as a stable hash of stream indices.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn derive_seed(root: u64, index: u64) -> u64 {
    root ^ splitmix64(index)
}

/// Two-level derivation, e.g. (step, task).
pub fn derive_seed2(root: u64, a: u64, b: u64) -> u64 {
    derive_seed(derive_seed(root, a), b.wrapping_add(0x5851_F42D_4C95_7F2D))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
