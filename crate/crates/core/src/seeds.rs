//! Deterministic seed derivation.
//!
//! Every random stream is derived from a user seed and a list of tags, so
//! results do not depend on evaluation order or thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Mixes a textual tag into a seed.
pub fn derive(seed: u64, tag: &str) -> u64 {
    splitmix(seed ^ splitmix(fnv1a(tag.as_bytes())))
}

/// Mixes an integer index into a seed.
pub fn derive_index(seed: u64, index: u64) -> u64 {
    splitmix(seed.wrapping_add(splitmix(index ^ 0x5151_5151_5151_5151)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
