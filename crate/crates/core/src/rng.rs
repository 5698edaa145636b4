//! Seeded, counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream addressed by
//! `(seed, stream)`, so results never depend on scheduling or thread count.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent child seed from `seed` and a purpose tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // reserved stream range, disjoint from the small trial indices
    stream_rng(seed, tag | (1 << 63)).next_u64()
}

pub mod tags {
    pub const TRAIN: u64 = 1;
    pub const TARGET: u64 = 2;
    pub const SPECTRAL: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const MEAN_BATCH: u64 = 5;
    pub const SIGNS: u64 = 6;
}
