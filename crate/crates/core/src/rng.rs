//! Seeded random streams.
//!
//! Every stochastic step in the crate draws from a ChaCha8 generator seeded
//! through [`stream`]. Substreams are derived from a base seed plus a path of
//! tags via SplitMix64, so independent components (corpus ages, speakers,
//! utterances, training runs, sweep cells) get decorrelated but fully
//! reproducible generators.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; used only for seed derivation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a path of tags.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    let mut s = splitmix64(seed);
    for &tag in path {
        s = splitmix64(s ^ splitmix64(tag));
    }
    s
}

/// Derive a seed tag from a string label.
pub fn tag(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// The crate-wide generator: ChaCha8 seeded by `derive(seed, path)`.
pub fn stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, path))
}
