//! Seed derivation for reproducible Monte Carlo runs.
//!
//! Every random stream in a study is keyed by a path of integers
//! (study seed, stream tag, dose index, scan index, ...). Derived seeds
//! depend only on that path, never on execution order, so results are
//! identical under any worker count.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a path of integers into a single 64-bit seed.
pub fn derive_seed(path: &[u64]) -> u64 {
    path.iter()
        .fold(GOLDEN_GAMMA, |acc, &x| splitmix64(acc ^ splitmix64(x)))
}

/// Stream tags so that distinct noise sources never share a seed path.
pub mod stream {
    pub const CCT189_SCAN: u64 = 1;
    pub const WATER_SCAN: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const METRIC_REFERENCE: u64 = 4;
    pub const METRIC_TEST: u64 = 5;
}
