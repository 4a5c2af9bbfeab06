//! Counter-based random streams: every task derives its generator from
//! `(seed, index)`, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stream for a two-level task index, e.g. (sequence length, randomization).
pub fn stream2(seed: u64, major: u64, minor: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ major.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(minor);
    rng
}
