//! Seeding conventions.
//!
//! Every random stream in the crate is a ChaCha8 generator (`rand_chacha`),
//! seeded from a `u64` through [`ChaCha8Rng::seed_from_u64`]. Sub-streams are
//! derived with SplitMix64 over `(seed, stream)` so that, for example, fold 3
//! of a run never shares a stream with fold 4.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent seed for a named sub-stream.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0x632B_E59B_D9B4_E019)))
}

pub fn sub_rng(seed: u64, stream: u64) -> Rng {
    rng(derive_seed(seed, stream))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
