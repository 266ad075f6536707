//! Seeded randomness.
//!
//! Every random stream is a ChaCha8 generator. Sub-streams (replicas, sweep
//! cells, per-operator sampling) get their seed from [`derive_seed`], which
//! runs the parent seed and the stream index through two rounds of the
//! SplitMix64 finalizer. The mixing is fixed so results are stable across
//! platforms and releases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix(splitmix(seed) ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
}
