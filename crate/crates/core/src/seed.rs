//! Seed derivation. Every value here is fixed across platforms and releases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used to draw the seed set.
pub const SEED_SET_STREAM: u64 = 0;
/// Stream consumed by the random selection strategy.
pub const STRATEGY_STREAM: u64 = 1;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed for replicate `replicate` of `topic`. Independent of strategy and
/// batch size, so runs that differ only in those are paired.
pub fn replicate_seed(base_seed: u64, topic: &str, replicate: usize) -> u64 {
    let h = splitmix64(base_seed ^ splitmix64(fnv1a(topic.as_bytes())));
    splitmix64(h ^ splitmix64(replicate as u64))
}

/// Independent generator for one purpose within a run.
pub fn child_rng(run_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(stream);
    rng
}
