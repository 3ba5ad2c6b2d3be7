//! Seed derivation. Every stochastic stage gets its own generator keyed by
//! (seed, stream, index) so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index)
}

pub fn stream_rng(seed: u64, stream: u64, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, stream, index))
}

pub mod streams {
    pub const FEATURE_INIT: u64 = 1;
    pub const MLP_INIT: u64 = 2;
    pub const HASH_INIT: u64 = 3;
    pub const BATCH: u64 = 4;
    pub const REFERENCE: u64 = 5;
    pub const EVAL: u64 = 6;
}
