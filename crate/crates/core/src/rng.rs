//! Seed derivation for independent, reproducible random streams.
//!
//! Every random quantity in a drop is drawn from a stream keyed by
//! `(seed, purpose, entity...)`. Keys of macro users and macro BSs do not
//! depend on the femtocell deployment, so runs that differ only in scheme,
//! `D`, `Le` or `M` share their macro-tier randomness (paired comparisons).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream purposes.
pub mod tag {
    pub const DROP: u64 = 0x6472_6f70;
    pub const MACRO_USERS: u64 = 0x6d75_7365;
    pub const BUILDINGS: u64 = 0x626c_6467;
    pub const FEMTO_USERS: u64 = 0x6675_7365;
    pub const SHADOW_OUTDOOR: u64 = 0x7368_6f75;
    pub const SHADOW_INDOOR: u64 = 0x7368_696e;
    pub const WALLS: u64 = 0x7761_6c6c;
    pub const FADING_UP: u64 = 0x6661_6475;
    pub const FADING_DOWN: u64 = 0x6661_6464;
}

/// SplitMix64 finaliser.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes a seed and a sequence of keys into a new 64-bit seed.
#[inline]
pub fn derive(seed: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

pub fn stream(seed: u64, keys: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive(seed, keys))
}

/// Seed of drop `index` under a master seed. Shared by every scheme and
/// sweep point so that comparisons are paired.
pub fn drop_seed(master: u64, index: u64) -> u64 {
    derive(master, &[tag::DROP, index])
}
