//! Seed derivation. Every random stream in the pipeline is derived from a
//! single root seed plus a stream path, so results do not depend on
//! scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for the stream identified by `path` under `root`.
pub fn derive(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(root), |acc, &p| splitmix64(acc.rotate_left(23) ^ splitmix64(p)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream tags for the stages that consume randomness.
pub mod stream {
    pub const SPLIT: u64 = 1;
    pub const KFOLD: u64 = 2;
    pub const SMO: u64 = 3;
    pub const SYNTH: u64 = 4;
}
