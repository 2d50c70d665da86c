//! Seeded randomness.
//!
//! Every random choice in the crate flows from a 64-bit seed through
//! [`SeededRng`] (ChaCha8). Independent streams are obtained by mixing a parent
//! seed with a stream label ([`derive_seed`]), so concurrent runs never share
//! generator state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for the stream `label` of `seed`.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    mix(mix(seed) ^ label.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Stream labels used across the crate.
pub mod stream {
    pub const GENERATOR: u64 = 1;
    pub const MESSAGES: u64 = 2;
    pub const WALKSAT: u64 = 3;
    pub const DECIMATION: u64 = 4;
    pub const RESTART: u64 = 5;
    pub const SCAN: u64 = 6;
}
