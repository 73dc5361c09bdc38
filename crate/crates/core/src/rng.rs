//! Seed derivation for reproducible runs.
//!
//! Every random stream in a run is a `ChaCha8Rng` seeded from the master seed
//! and a list of integer tags (member index, env index, fragment counter, ...)
//! so that streams are independent and stable across runs.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good enough to decorrelate tagged seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a tag path.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut acc = mix(master);
    for &t in tags {
        acc = mix(acc ^ mix(t));
    }
    acc
}

/// Derive an independent RNG stream from a master seed and a tag path.
pub fn derive_rng(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tags))
}
