//! Seeded random streams.
//!
//! Every replica of an experiment draws from its own ChaCha stream, derived
//! from the master seed and a stream id, so results do not depend on the order
//! in which replicas run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream `id` of the generator seeded with `seed`.
pub fn substream(seed: u64, id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Stream id for replica `replica` of an experiment at size `n`.
pub fn replica_stream(seed: u64, n: usize, replica: usize) -> Stream {
    substream(seed, ((n as u64) << 24) ^ replica as u64)
}
