//! Shared fixtures for the criterion benchmarks in `benches/`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zoslice::targets::generate_logistic_data;
use zoslice::LogisticRegressionTarget;

/// Logistic posterior with `n = d` synthetic observations, as in the sweeps.
pub fn logistic(d: usize) -> LogisticRegressionTarget {
    generate_logistic_data(1, d, d)
        .and_then(|data| data.target())
        .expect("synthetic logistic data")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A point away from the origin so that every sigmoid term is non-trivial.
pub fn point(d: usize) -> Vec<f64> {
    (0..d).map(|i| 0.01 * ((i % 7) as f64 - 3.0)).collect()
}
