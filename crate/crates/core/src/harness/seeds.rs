//! Independent RNG streams derived from the master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of batch `batch` of sweep point `point`.
pub fn stream_seed(master: u64, point: u64, batch: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ point) ^ batch)
}

pub fn stream_rng(master: u64, point: u64, batch: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, point, batch))
}

/// Seed of run-wide objects (interleavers) that are not tied to a point.
pub fn run_seed(master: u64, tag: u64) -> u64 {
    stream_seed(master, u64::MAX, tag)
}
