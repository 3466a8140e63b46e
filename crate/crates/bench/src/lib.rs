//! Shared fixtures for the benchmarks.

use bvr_core::dataset::{encoded_columns, EncodedMatrix, ENCODED_WIDTH};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` random rows in the engagement schema with a smooth target.
pub fn synthetic_matrix(n: usize, seed: u64) -> EncodedMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * ENCODED_WIDTH);
    let mut target = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..ENCODED_WIDTH).map(|_| rng.gen()).collect();
        target.push(0.5 + 0.3 * (row[0] * 6.0).sin() * row[1] + 0.1 * row[15] + 0.02 * rng.gen::<f64>());
        data.extend(row);
    }
    EncodedMatrix::new(encoded_columns(), data, target).expect("fixture shape")
}
