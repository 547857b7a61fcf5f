use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator for a (seed, stream) pair.
///
/// Separate streams keep independent consumers (pair sampling, shuffling,
/// initialization) from perturbing each other when one of them changes how
/// many draws it makes.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) mod streams {
    pub const INIT: u64 = 1;
    pub const PRETRAIN_SHUFFLE: u64 = 2;
    pub const TRAIN_SHUFFLE: u64 = 3;
    pub const PAIRS: u64 = 4;
    pub const SYNTH: u64 = 5;
    pub const MATCH: u64 = 6;
    pub const TRIPLETS: u64 = 7;
    pub const PROBE_SPLIT: u64 = 8;
    pub const PERMUTATION: u64 = 9;
}
