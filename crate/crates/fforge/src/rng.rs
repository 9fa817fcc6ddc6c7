//! Deterministic seed derivation.
//!
//! Every random decision in the crate draws from a `ChaCha8Rng` seeded through
//! this module, so a run is fully determined by one global seed. Substreams
//! are derived by mixing tags into the parent seed; distinct tag paths give
//! statistically independent streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good avalanche for cheap seed mixing.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a tag.
pub fn child_seed(parent: u64, tag: u64) -> u64 {
    splitmix64(parent ^ splitmix64(tag))
}

/// Hash a string label into a tag (FNV-1a).
pub fn tag(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Fold a chain of tags into a seed.
pub fn seed_path(parent: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(parent, |s, &t| child_seed(s, t))
}

/// RNG for the substream identified by `tags` under `parent`.
pub fn rng_path(parent: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed_path(parent, tags))
}
