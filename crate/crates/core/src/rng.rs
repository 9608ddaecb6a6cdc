//! Seeding rules shared by every Monte-Carlo routine.
//!
//! All randomness comes from `Xoshiro256PlusPlus` seeded through SplitMix64
//! (`SeedableRng::seed_from_u64`). Work that is split into shards derives one
//! stream per shard with [`shard_seed`], so results do not depend on how many
//! threads execute the shards.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type Rng = Xoshiro256PlusPlus;

pub fn from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Seed of shard `index`: the SplitMix64 finalizer applied to
/// `seed + (index + 1) * 0x9E3779B97F4A7C15`.
pub fn shard_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn shard_rng(seed: u64, index: u64) -> Rng {
    from_seed(shard_seed(seed, index))
}
