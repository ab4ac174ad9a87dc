//! Seed derivation for reproducible, order-independent random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Hashes a sequence of integers into one seed.
pub fn mix_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from(parts: &[u64]) -> Rng {
    Rng::seed_from_u64(mix_seed(parts))
}

/// Stream tags keep independent consumers of one user seed apart.
pub mod stream {
    pub const WALKS: u64 = 1;
    pub const SKIPGRAM: u64 = 2;
    pub const GNN: u64 = 3;
    pub const PARTITION: u64 = 4;
    pub const CLASSIFIER: u64 = 5;
    pub const SPLIT: u64 = 6;
    pub const RANDOM_EMBEDDING: u64 = 7;
    pub const SYNTH_GRAPH: u64 = 8;
    pub const SYNTH_ARTICLES: u64 = 9;
    pub const SHUFFLE_LABELS: u64 = 10;
}
