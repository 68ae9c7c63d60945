//! Deterministic random streams.
//!
//! Every randomized operation in this crate draws from a ChaCha8 stream
//! whose 64-bit seed is derived from `(master seed, purpose tag[, index])`
//! with a SplitMix64 finalizer over an FNV-1a tag hash. Streams for
//! distinct purposes are statistically independent, and a given
//! `(seed, tag, index)` triple yields the same stream on every platform.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// ChaCha8 keyed from a derived 64-bit seed.
pub type Stream = ChaCha8Rng;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the 64-bit sub-seed for `(master, tag, index)`.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let mixed = splitmix64(master ^ fnv1a(tag.as_bytes()));
    splitmix64(mixed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Stream for a one-off purpose under a master seed.
pub fn stream(master: u64, tag: &str) -> Stream {
    indexed_stream(master, tag, 0)
}

/// Stream for the `index`-th instance of a purpose (epoch number,
/// trial number, bootstrap replicate, ...).
pub fn indexed_stream(master: u64, tag: &str, index: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag, index))
}
