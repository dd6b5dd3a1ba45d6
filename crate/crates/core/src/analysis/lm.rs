// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Levenberg-Marquardt least squares with a central-difference Jacobian.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative change of the residual sum falls below this.
    pub tolerance: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 400, tolerance: 1e-14, initial_lambda: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutput {
    pub params: Vec<f64>,
    /// One-sigma uncertainties from `(J^T J)^-1 s^2`, `s^2 = RSS / (n - p)`.
    pub sigmas: Vec<f64>,
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LmOutput {
    pub fn residual_norm(&self) -> f64 {
        self.rss.sqrt()
    }
}

fn rss<F: Fn(&[f64], f64) -> f64>(model: &F, p: &[f64], x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(&xi, &yi)| (yi - model(p, xi)).powi(2)).sum()
}

fn jacobian<F: Fn(&[f64], f64) -> f64>(model: &F, p: &[f64], x: &[f64], scales: &[f64]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(x.len(), p.len());
    let mut probe = p.to_vec();
    for k in 0..p.len() {
        let h = 1e-6 * p[k].abs().max(scales[k]);
        probe[k] = p[k] + h;
        let up: Vec<f64> = x.iter().map(|&xi| model(&probe, xi)).collect();
        probe[k] = p[k] - h;
        for (i, &xi) in x.iter().enumerate() {
            j[(i, k)] = (up[i] - model(&probe, xi)) / (2.0 * h);
        }
        probe[k] = p[k];
    }
    j
}

/// Minimize `sum (y_i - model(p, x_i))^2` starting from `p0`.
pub fn levenberg_marquardt<F>(model: F, x: &[f64], y: &[f64], p0: &[f64], opts: &LmOptions) -> LmOutput
where
    F: Fn(&[f64], f64) -> f64,
{
    let m = p0.len();
    let scales: Vec<f64> = p0.iter().map(|v| if v.abs() > 0.0 { v.abs() } else { 1e-3 }).collect();
    let mut p = p0.to_vec();
    let mut cost = rss(&model, &p, x, y);
    let mut lambda = opts.initial_lambda;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let j = jacobian(&model, &p, x, &scales);
        let r = DVector::from_iterator(x.len(), x.iter().zip(y).map(|(&xi, &yi)| yi - model(&p, xi)));
        let a = j.transpose() * &j;
        let g = j.transpose() * r;
        let diag_floor = a.diagonal().max() * 1e-15 + f64::MIN_POSITIVE;
        let mut improved = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for k in 0..m {
                damped[(k, k)] += lambda * a[(k, k)].max(diag_floor);
            }
            let step = match damped.clone().cholesky() {
                Some(c) => c.solve(&g),
                None => match damped.lu().solve(&g) {
                    Some(s) => s,
                    None => {
                        lambda *= 10.0;
                        continue;
                    }
                },
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let trial_cost = rss(&model, &trial, x, y);
            if trial_cost.is_finite() && trial_cost <= cost {
                let rel = (cost - trial_cost) / cost.max(f64::MIN_POSITIVE);
                let small_step = step.iter().zip(&p).all(|(s, v)| s.abs() <= 1e-12 * v.abs().max(1e-300));
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel < opts.tolerance || small_step || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No downhill step at any damping: a (local) minimum.
            converged = true;
        }
        if converged {
            break;
        }
    }
    let j = jacobian(&model, &p, x, &scales);
    let dof = x.len().saturating_sub(m);
    let s2 = if dof > 0 { cost / dof as f64 } else { 0.0 };
    let jtj = j.transpose() * &j;
    let cov = jtj.clone().try_inverse().or_else(|| jtj.pseudo_inverse(1e-300).ok());
    let sigmas = match cov {
        Some(c) => (0..m).map(|k| (c[(k, k)].abs() * s2).sqrt()).collect(),
        None => vec![f64::INFINITY; m],
    };
    LmOutput { params: p, sigmas, rss: cost, iterations, converged }
}
