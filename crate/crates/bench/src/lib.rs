//! Seeded inputs shared by the benchmarks.

use conedeflate::random::random_psd;
use conedeflate::HermitianMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Full-rank unit-trace PSD matrix.
pub fn psd(dim: usize, seed: u64) -> HermitianMatrix {
    random_psd(dim, dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `m` equispaced points in `[0, 1]`.
pub fn grid(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| vec![i as f64 / (m.max(2) - 1) as f64])
        .collect()
}
