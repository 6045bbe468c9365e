//! Input generators shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `rows` heavy-tailed samples of width `dim`, spanning several decades.
pub fn wide_range_rows(rows: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows)
        .map(|_| {
            (0..dim)
                .map(|_| 10f64.powf(rng.random_range(-6.0..2.0)))
                .collect()
        })
        .collect()
}
