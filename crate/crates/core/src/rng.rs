//! Reproducible random streams.
//!
//! Every stochastic unit of work (a chain of one block, one simulated draw,
//! one fold) gets its own ChaCha stream keyed by the master seed and a small
//! tuple of indices. ChaCha is counter based, so streams never overlap and
//! results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

/// What a stream is used for; keeps streams of different tasks apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Gibbs = 1,
    Career = 2,
    AgeCurve = 3,
    Split = 4,
    Predictive = 5,
    Synthetic = 6,
    Recovery = 7,
    Subsample = 8,
    CrossValidation = 9,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stream for `(seed, purpose, a, b)`.
pub fn stream(seed: u64, purpose: Purpose, a: u64, b: u64) -> StreamRng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let key = splitmix(splitmix(splitmix(purpose as u64) ^ a) ^ b.rotate_left(32));
    rng.set_stream(key);
    rng
}

/// Derive a child seed, for handing a sub-task its own master seed.
pub fn derive_seed(seed: u64, purpose: Purpose, index: u64) -> u64 {
    splitmix(seed ^ splitmix((purpose as u64) << 48 ^ index))
}
