// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Seeded noisy data for fit round-trips.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "sigma", rename_all = "snake_case")]
pub enum Noise {
    /// Gaussian with this standard deviation.
    Absolute(f64),
    /// Gaussian with standard deviation `sigma * |y|`.
    Relative(f64),
}

/// `clean` plus independent Gaussian noise, reproducible from `seed`.
pub fn add_noise(clean: &[f64], noise: Noise, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    clean
        .iter()
        .map(|&y| {
            let z: f64 = unit.sample(&mut rng);
            match noise {
                Noise::Absolute(s) => y + s * z,
                Noise::Relative(s) => y * (1.0 + s * z),
            }
        })
        .collect()
}

/// `count` points `start, start + step, ...`.
pub fn linear_grid(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| start + step * k as f64).collect()
}

/// `count` logarithmically spaced points spanning `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count.max(2) - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_is_seeded() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(add_noise(&y, Noise::Absolute(0.1), 4), add_noise(&y, Noise::Absolute(0.1), 4));
        assert_ne!(add_noise(&y, Noise::Absolute(0.1), 4), add_noise(&y, Noise::Absolute(0.1), 5));
        assert_eq!(add_noise(&[0.0], Noise::Relative(0.5), 1), vec![0.0]);
    }

    #[test]
    fn grids() {
        let g = log_grid(0.1, 1.0, 3);
        assert!((g[0] - 0.1).abs() < 1e-15 && (g[1] - 0.1f64.sqrt()).abs() < 1e-15 && (g[2] - 1.0).abs() < 1e-15);
        assert_eq!(linear_grid(1.0, 0.5, 3), vec![1.0, 1.5, 2.0]);
    }
}
