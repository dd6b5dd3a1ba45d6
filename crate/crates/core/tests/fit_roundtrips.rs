// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Every fit recovers its generator parameters from seeded noisy data in at
//! least 95 of 100 trials.

use std::f64::consts::PI;

use spinscale_core::analysis::synthetic::{add_noise, linear_grid, log_grid, Noise};
use spinscale_core::analysis::*;

const TRIALS: u64 = 100;
const REQUIRED: usize = 95;

fn passes(check: impl Fn(u64) -> bool) -> usize {
    (0..TRIALS).filter(|&seed| check(seed)).count()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn abragam_round_trip() {
    let (w, h) = (2.0 * PI * 10e3, 2.0 * PI * 6e3);
    let x = linear_grid(0.0, 1.5e-6, 60);
    let clean: Vec<f64> = x.iter().map(|&t| abragam(w, h, t)).collect();
    let ok = passes(|seed| match fit_abragam(&x, &add_noise(&clean, Noise::Absolute(0.002), seed), None) {
        Ok(f) => rel(f.value("w"), w) < 0.01 && rel(f.value("h"), h) < 0.01,
        Err(_) => false,
    });
    assert!(ok >= REQUIRED, "{ok}/100");
}

#[test]
fn flambaum_izrailev_round_trip() {
    let (gamma, sigma) = (2.08, 0.708);
    let x = linear_grid(0.0, 0.05, 80);
    let clean: Vec<f64> = x.iter().map(|&t| flambaum_izrailev(gamma, sigma, t)).collect();
    let ok = passes(|seed| match fit_flambaum_izrailev(&x, &add_noise(&clean, Noise::Relative(5e-4), seed)) {
        Ok(f) => rel(f.value("gamma"), gamma) < 0.01 && rel(f.value("sigma"), sigma) < 0.01,
        Err(_) => false,
    });
    assert!(ok >= REQUIRED, "{ok}/100");
}

#[test]
fn boltzmann_round_trip() {
    let x = linear_grid(0.0, 0.05, 60);
    let clean: Vec<f64> = x.iter().map(|&t| boltzmann(1.0, 0.0, 1.0, 0.2, t)).collect();
    let ok = passes(|seed| match fit_boltzmann(&x, &add_noise(&clean, Noise::Absolute(0.01), seed), None) {
        Ok(f) => (f.value("x0") - 1.0).abs() < 0.05 && (f.value("dx") - 0.2).abs() < 0.05,
        Err(_) => false,
    });
    assert!(ok >= REQUIRED, "{ok}/100");
}

#[test]
fn gaussian_mqc_round_trip() {
    let orders: Vec<i64> = (-32..32).collect();
    let clean: Vec<f64> = orders.iter().map(|&q| (-(q * q) as f64 / 25.0).exp()).collect();
    let ok = passes(|seed| match fit_gaussian_orders(&orders, &add_noise(&clean, Noise::Relative(0.02), seed)) {
        Ok(f) => rel(f.value("N"), 5.0) < 0.02 && f.flags.is_empty(),
        Err(_) => false,
    });
    assert!(ok >= REQUIRED, "{ok}/100");
}

#[test]
fn power_law_round_trip() {
    let x = log_grid(0.1, 1.0, 20);
    let clean: Vec<f64> = x.iter().map(|&t| 3.0 * t.powf(1.5)).collect();
    let ok = passes(|seed| match fit_power_law(&x, &add_noise(&clean, Noise::Relative(0.02), seed)) {
        Ok(f) => (f.value("b") - 1.5).abs() < 0.02,
        Err(_) => false,
    });
    assert!(ok >= REQUIRED, "{ok}/100");
}

#[test]
fn saturation_round_trip() {
    let r = 0.15;
    let x = linear_grid(0.02, 0.07, 15);
    let clean: Vec<f64> = x.iter().map(|&v| (r * r + v * v).sqrt()).collect();
    let ok = passes(|seed| match fit_saturation(&x, &add_noise(&clean, Noise::Absolute(0.01), seed)) {
        Ok(f) => (f.value("R") - r).abs() < 2.0 * 0.02,
        Err(_) => false,
    });
    assert!(ok >= REQUIRED, "{ok}/100");
}

#[test]
fn saturation_on_unit_line_vanishes() {
    let x = linear_grid(0.1, 0.1, 10);
    let f = fit_saturation(&x, &x).unwrap();
    assert!(f.value("R") < 1e-6, "{}", f.value("R"));
}

#[test]
fn appendix_rates() {
    let gr = fgr_rate(2.08, 0.708).unwrap();
    assert!((gr.sigma_1 - 0.757).abs() < 5e-4, "{}", gr.sigma_1);
    assert!((gr.sigma_1 - 0.759).abs() <= 0.232);
    assert!((t_star(0.708) - 1.998).abs() < 1e-3);
}

#[test]
fn exact_line_recovered() {
    let x = linear_grid(0.0, 0.01, 12);
    let y: Vec<f64> = x.iter().map(|&v| 26.77 * v - 0.71).collect();
    let fit = linear_fit(&x, &y).unwrap();
    assert!((fit.slope - 26.77).abs() < 1e-10 && (fit.intercept + 0.71).abs() < 1e-10);
    assert!(fit.slope_sigma < 1e-10);
}

#[test]
fn fit_result_serializes_alongside_curves() {
    let x = linear_grid(0.0, 0.05, 60);
    let y: Vec<f64> = x.iter().map(|&t| boltzmann(1.0, 0.0, 1.0, 0.2, t)).collect();
    let fit = fit_boltzmann(&x, &y, Some(0.25)).unwrap();
    let back: FitResult = serde_json::from_str(&serde_json::to_string_pretty(&fit).unwrap()).unwrap();
    assert_eq!(back, fit);
    assert!((fit.derived_value("T_half_self").unwrap() - 0.25 * fit.derived_value("T_half").unwrap()).abs() < 1e-15);
}
