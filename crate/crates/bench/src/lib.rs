//! Fixtures shared by the benchmarks.

use fablab::{generate_gmm_data, Dataset, GenConfig};

/// `k_true` unit-variance clusters, 8 standard deviations apart.
pub fn clusters(n: usize, dims: usize, k_true: usize, seed: u64) -> Dataset {
    let gen = GenConfig { seed, k_true, n, dims, separation: 8.0, variance: 1.0 };
    generate_gmm_data(&gen).expect("valid generator config").0
}
