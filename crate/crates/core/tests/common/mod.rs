#![allow(dead_code)]

use ccffs::dataset::{synthetic_uniform, EncodedDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One seeded random instance of the suite.
pub struct Instance {
    pub seed: u64,
    pub data: EncodedDataset,
}

/// `count` instances with `n` in `[2, 10]`, `m` in `[1, 4]` and `N` in
/// `[10, 60]`, kept at `N >= n + m + 2` so every engine applies.
pub fn suite(count: usize, base_seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    (0..count)
        .map(|k| {
            let n = rng.random_range(2..=10);
            let m = rng.random_range(1..=4);
            let lo = (n + m + 2).max(10);
            let big_n = rng.random_range(lo..=60);
            let seed = base_seed.wrapping_mul(1_000_003).wrapping_add(k as u64);
            Instance {
                seed,
                data: synthetic_uniform(big_n, n, m, seed).unwrap(),
            }
        })
        .collect()
}

/// Single-response instances for the regression comparison.
pub fn single_output_suite(count: usize, base_seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    (0..count)
        .map(|k| {
            let n = rng.random_range(2..=10);
            let big_n = rng.random_range((n + 3).max(10)..=60);
            let seed = base_seed.wrapping_mul(7_919).wrapping_add(k as u64);
            Instance {
                seed,
                data: synthetic_uniform(big_n, n, 1, seed).unwrap(),
            }
        })
        .collect()
}
