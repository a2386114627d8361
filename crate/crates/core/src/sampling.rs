//! Seeding contract and summary statistics for Monte Carlo runs.
//!
//! Trial `k` of a run with master seed `s` draws from ChaCha8 seeded with `s`
//! on stream `k`, so results do not depend on thread count or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Standard error of a Bernoulli frequency estimate after `n` trials.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Mean, sample standard deviation and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std_dev: f64,
    pub std_error: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std_dev: f64::NAN, std_error: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        let std_dev = var.sqrt();
        Self { mean, std_dev, std_error: std_dev / (n as f64).sqrt() }
    }

    /// Whether `expected` lies within `k` standard errors of the mean.
    /// A zero-variance sample must match to 1e-9 relative.
    pub fn agrees_with(&self, expected: f64, k: f64) -> bool {
        let tol = (k * self.std_error).max(1e-9 * expected.abs().max(1.0));
        (self.mean - expected).abs() <= tol
    }
}
