//! Seeded, splittable random streams.
//!
//! Every stochastic routine takes a `&mut SimRng`. Independent consumers
//! (per-seed runs, per-row estimators) get their own stream through
//! [`stream`], so results never depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Root stream for a seed.
pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sub-stream `id` of `seed`. Streams with different ids never overlap.
pub fn stream(seed: u64, id: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
