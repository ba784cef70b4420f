//! Seeded random streams.
//!
//! One master seed; work unit `i` (a Monte Carlo path or a bootstrap
//! replicate) draws from ChaCha stream `i` of that seed, so any unit can be
//! regenerated in isolation and results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
