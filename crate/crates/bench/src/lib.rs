//! Fixtures shared by the benchmarks in `benches/`.

use giplab_core::{BSpec, Instance, RngHandle};

/// Seeded instance with `b = 0`.
pub fn instance(m: usize, n: usize, seed: u64) -> Instance {
    Instance::generate(m, n, BSpec::Zeros, &mut RngHandle::new(seed, 0)).expect("valid dimensions")
}

/// `n` uniform knapsack weights.
pub fn weights(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngHandle::new(seed, 0);
    (0..n).map(|_| rng.uniform()).collect()
}
