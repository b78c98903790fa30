//! Seeded randomness. Every stochastic routine takes an explicit `u64` seed
//! and derives independent streams by adding an index to it.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub type SimRng = ChaCha8Rng;

pub fn rng_for(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of the `index`-th sub-stream of `base`.
pub fn split_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index)
}

/// Circular complex Gaussian with E|z|² = σ²: real and imaginary parts are
/// independent N(0, σ²/2).
pub fn complex_gaussian(rng: &mut SimRng, sigma: f64) -> Complex64 {
    if sigma == 0.0 {
        return Complex64::ZERO;
    }
    let normal = Normal::new(0.0, sigma / std::f64::consts::SQRT_2).expect("finite sigma");
    Complex64::new(normal.sample(rng), normal.sample(rng))
}
