//! Seed derivation for schedule-independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Salts separating independent stream families drawn from one master seed.
pub mod salt {
    pub const INNOVATIONS: u64 = 0x1;
    pub const TRUNCATION_EPS: u64 = 0x2;
    pub const STABLE: u64 = 0x3;
    pub const ROSENBLATT: u64 = 0x4;
    pub const GAUSSIAN_LIMIT: u64 = 0x5;
    pub const LIMIT: u64 = 0x6;
    pub const REPLICATION: u64 = 0x7;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a master seed together with a path of indices into a child seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(0xA5A5_A5A5))))
}

pub fn rng_from(master: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, path))
}
