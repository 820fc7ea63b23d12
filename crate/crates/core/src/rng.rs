//! Seeded random streams.
//!
//! Every stochastic component draws from its own ChaCha stream derived from the
//! run seed, so adding draws in one component never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub(crate) const STREAM_TOPOLOGY: u64 = 1;
pub(crate) const STREAM_PROFILE: u64 = 2;
pub(crate) const STREAM_TRIGGERS: u64 = 3;
pub(crate) const STREAM_DELAYS: u64 = 4;
pub(crate) const STREAM_POLICY: u64 = 5;

/// Independent stream `tag` of the generator seeded with `seed`.
pub fn stream(seed: u64, tag: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}
