//! Seeded inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xicor_core::Sample;

/// `n` points uniform on `[0, 1]^d` with `y = x_1 + U(0, 1/2)`.
pub fn noisy_sample(n: usize, d: usize, seed: u64) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
    let y = (0..n)
        .map(|i| x[i * d] + 0.5 * rng.random::<f64>())
        .collect();
    Sample::from_flat(d, x, y).expect("finite values")
}
