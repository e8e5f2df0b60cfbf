//! Seeded inputs shared by the benchmarks.

use perron_core::MatrixKernel;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// `n × n` matrix with entries uniform in `[0, 1)`.
pub fn random_matrix(n: usize, seed: u64) -> MatrixKernel {
    let mut rng = StdRng::seed_from_u64(seed);
    let entries = (0..n * n).map(|_| rng.gen::<f64>()).collect();
    MatrixKernel::new(n, entries).expect("finite entries")
}
