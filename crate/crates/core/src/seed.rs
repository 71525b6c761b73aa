//! Deterministic seed derivation for parallel and per-item random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `index` of `seed`: `splitmix64(splitmix64(seed) ^ index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index)
}

/// Seed for an unordered item such as a pixel subset, independent of the
/// order in which items are visited.
pub fn derive_seed_for(seed: u64, items: &[usize]) -> u64 {
    items
        .iter()
        .fold(splitmix64(seed ^ 0xA5A5_A5A5), |acc, &i| {
            splitmix64(acc ^ i as u64)
        })
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
