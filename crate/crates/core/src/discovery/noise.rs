//! Additive Gaussian measurement noise scaled to the field RMS.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rms(u: &[f64]) -> f64 {
    (u.iter().map(|x| x * x).sum::<f64>() / u.len().max(1) as f64).sqrt()
}

pub fn noise_sigma(u: &[f64], sigma_nr: f64) -> f64 {
    sigma_nr * rms(u)
}

/// Adds i.i.d. `N(0, (σ_NR · rms(u))²)` noise in place.
pub fn add_noise(u: &mut [f64], sigma_nr: f64, seed: u64) {
    if sigma_nr == 0.0 {
        return;
    }
    let sigma = noise_sigma(u, sigma_nr);
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for x in u.iter_mut() {
        *x += normal.sample(&mut rng);
    }
}
