//! Seeded RNG used by every sampler. All randomness flows through explicit
//! seeds; the same (params, n, seed) triple always yields byte-identical
//! output.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type SeedRng = ChaCha12Rng;

pub fn seed_rng(seed: u64) -> SeedRng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Independent stream for sharded or multi-phase work, still fully
/// determined by (seed, index).
pub fn substream(seed: u64, index: u64) -> SeedRng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index.into());
    rng
}
