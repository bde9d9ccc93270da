//! Per-replicate random streams.
//!
//! Replicate `r` of an ensemble seeded with `seed` uses ChaCha8 keyed by
//! `seed` on stream `r`. Streams are independent and addressable without
//! generating any of the others, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ReplicateRng = ChaCha8Rng;

pub fn replicate_rng(seed: u64, replicate: u64) -> ReplicateRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}
