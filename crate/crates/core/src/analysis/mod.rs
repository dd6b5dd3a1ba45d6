// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Decay models, their least-squares fits and the time scales derived from
//! them.
//!
//! Every fit returns a [`FitResult`]; acceptance thresholds are left to the
//! caller. Functions are unit-agnostic: times and rates only need to be in
//! reciprocal units.

mod lm;
pub mod synthetic;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpinError};
use crate::protocols::MQCSpectrum;

pub use lm::{levenberg_marquardt, LmOptions, LmOutput};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// One-sigma uncertainty, never negative.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub parameters: BTreeMap<String, Estimate>,
    pub residual_norm: f64,
    pub derived: BTreeMap<String, f64>,
    pub n_points: usize,
    pub converged: bool,
    /// Diagnostics such as fallbacks or the initial guesses used.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl FitResult {
    fn new(model: &str, names: &[&str], out: &LmOutput, n_points: usize) -> Self {
        let parameters = names
            .iter()
            .zip(out.params.iter().zip(&out.sigmas))
            .map(|(n, (&value, &sigma))| (n.to_string(), Estimate { value, sigma: sigma.abs() }))
            .collect();
        Self {
            model: model.into(),
            parameters,
            residual_norm: out.residual_norm(),
            derived: BTreeMap::new(),
            n_points,
            converged: out.converged,
            flags: Vec::new(),
        }
    }

    /// Value of a parameter; panics on unknown names.
    pub fn value(&self, name: &str) -> f64 {
        self.parameters[name].value
    }

    pub fn derived_value(&self, name: &str) -> Option<f64> {
        self.derived.get(name).copied()
    }
}

fn check_xy(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(SpinError::DimensionMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < min {
        return Err(SpinError::InvalidArgument(format!("need at least {min} points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(SpinError::InvalidArgument("non-finite data".into()));
    }
    Ok(())
}

fn fit_failed(model: &str, reason: String) -> SpinError {
    SpinError::FitFailed { model: model.into(), reason }
}

fn best_of<F: Fn(&[f64], f64) -> f64 + Copy>(model: F, x: &[f64], y: &[f64], starts: &[Vec<f64>]) -> LmOutput {
    let opts = LmOptions::default();
    starts
        .iter()
        .map(|p0| levenberg_marquardt(model, x, y, p0, &opts))
        .filter(|o| o.rss.is_finite())
        .min_by(|a, b| a.rss.total_cmp(&b.rss))
        .expect("at least one start")
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `sinc(w t) exp(-(h t)^2 / 2)`.
pub fn abragam(w: f64, h: f64, t: f64) -> f64 {
    sinc(w * t) * (-(h * t).powi(2) / 2.0).exp()
}

/// `1 / T_2 = sqrt(h^2 + w^2 / 3)`.
pub fn abragam_t2(w: f64, h: f64) -> f64 {
    1.0 / (h * h + w * w / 3.0).sqrt()
}

/// First time the curve drops through zero, by linear interpolation.
fn first_zero(x: &[f64], y: &[f64]) -> Option<f64> {
    (1..x.len()).find(|&i| y[i - 1] > 0.0 && y[i] <= 0.0).map(|i| x[i - 1] + (x[i] - x[i - 1]) * y[i - 1] / (y[i - 1] - y[i]))
}

/// Second moment from the early-time curvature, `1 - y ~ M2 t^2 / 2`.
fn early_curvature(x: &[f64], y: &[f64]) -> Option<f64> {
    let y0 = y[0];
    x.iter()
        .zip(y)
        .skip(1)
        .find(|(_, &v)| v < 0.9 * y0 && v > 0.0)
        .map(|(&t, &v)| 2.0 * (1.0 - v / y0) / (t * t))
        .filter(|m| m.is_finite() && *m > 0.0)
}

/// Fit `sinc(w t) exp(-(h t)^2 / 2)`. With `delta`, also reports the
/// rescaled moment `1 / (delta T_2)`.
pub fn fit_abragam(x: &[f64], y: &[f64], delta: Option<f64>) -> Result<FitResult> {
    check_xy(x, y, 8)?;
    let model = |p: &[f64], t: f64| abragam(p[0], p[1], t);
    let m2 = early_curvature(x, y).ok_or_else(|| fit_failed("abragam", "curve never decays below 90%".into()))?;
    let w0 = first_zero(x, y).map(|t0| PI / t0).unwrap_or(0.0);
    // M2 = w^2/3 + h^2
    let h0 = (m2 - w0 * w0 / 3.0).max(0.1 * m2).sqrt();
    let starts = vec![vec![w0, h0], vec![0.5 * w0, h0], vec![m2.sqrt(), 0.5 * m2.sqrt()], vec![1e-3 * m2.sqrt(), m2.sqrt()]];
    let out = best_of(model, x, y, &starts);
    let (w, h) = (out.params[0].abs(), out.params[1].abs());
    let mut fit = FitResult::new("abragam", &["w", "h"], &out, x.len());
    fit.parameters.get_mut("w").unwrap().value = w;
    fit.parameters.get_mut("h").unwrap().value = h;
    let t2 = abragam_t2(w, h);
    fit.derived.insert("T2".into(), t2);
    fit.derived.insert("M2".into(), 1.0 / (t2 * t2));
    if let Some(d) = delta {
        fit.derived.insert("rescaled_moment".into(), 1.0 / (d * t2));
    }
    fit.flags.push(format!("initial guess w0={w0:.6e} h0={h0:.6e}"));
    if !out.converged {
        return Err(fit_failed("abragam", format!("no convergence from w0={w0:e}, h0={h0:e}")));
    }
    Ok(fit)
}

/// `exp(2 G^2/s^2 - 2 sqrt(G^4/s^4 + G^2 t^2))`, evaluated without cancellation.
pub fn flambaum_izrailev(gamma: f64, sigma: f64, t: f64) -> f64 {
    let a = gamma * gamma / (sigma * sigma);
    let g2t2 = gamma * gamma * t * t;
    // 2a - 2 sqrt(a^2 + g2t2) = -2 g2t2 / (a + sqrt(a^2 + g2t2))
    let denom = a + (a * a + g2t2).sqrt();
    if denom == 0.0 {
        return 1.0;
    }
    (-2.0 * g2t2 / denom).exp()
}

/// `T_* = sqrt(2) / sigma`.
pub fn t_star(sigma: f64) -> f64 {
    2f64.sqrt() / sigma
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoldenRule {
    /// `pi sigma^2 / Gamma`.
    pub sigma_1: f64,
    /// `1 / sigma_1`.
    pub n_1: f64,
}

/// Width of directly connected states from the golden-rule rate.
pub fn fgr_rate(gamma: f64, sigma: f64) -> Result<GoldenRule> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(SpinError::InvalidArgument(format!("golden-rule rate needs Gamma > 0, got {gamma}")));
    }
    let sigma_1 = PI * sigma * sigma / gamma;
    Ok(GoldenRule { sigma_1, n_1: 1.0 / sigma_1 })
}

/// Fit the Flambaum-Izrailev crossover between Gaussian and exponential decay.
pub fn fit_flambaum_izrailev(x: &[f64], y: &[f64]) -> Result<FitResult> {
    check_xy(x, y, 4)?;
    if y.iter().any(|&v| v <= 0.0) {
        return Err(fit_failed("flambaum_izrailev", "decay must stay positive".into()));
    }
    let model = |p: &[f64], t: f64| flambaum_izrailev(p[0].abs(), p[1].abs(), t);
    // short times: -ln f ~ sigma^2 t^2; long times: -ln f ~ 2 Gamma t
    let logs: Vec<f64> = y.iter().map(|v| -v.ln()).collect();
    let early = x.iter().zip(&logs).skip(1).find(|(_, &l)| l > 0.05).map(|(&t, &l)| (l / (t * t)).sqrt());
    let n = x.len();
    let late = if n >= 4 && x[n - 1] > x[n / 2] { (logs[n - 1] - logs[n / 2]) / (2.0 * (x[n - 1] - x[n / 2])) } else { 0.0 };
    let s0 = early.unwrap_or(1.0 / x[n - 1].max(f64::MIN_POSITIVE));
    let g0 = if late > 0.0 { late } else { s0 };
    let starts = vec![vec![g0, s0], vec![2.0 * g0, s0], vec![0.5 * g0, s0], vec![g0, 0.7 * s0]];
    let out = best_of(model, x, y, &starts);
    let (gamma, sigma) = (out.params[0].abs(), out.params[1].abs());
    let mut fit = FitResult::new("flambaum_izrailev", &["gamma", "sigma"], &out, n);
    fit.parameters.get_mut("gamma").unwrap().value = gamma;
    fit.parameters.get_mut("sigma").unwrap().value = sigma;
    fit.derived.insert("T_star".into(), t_star(sigma));
    let gr = fgr_rate(gamma, sigma)?;
    fit.derived.insert("sigma_1".into(), gr.sigma_1);
    fit.derived.insert("N_1".into(), gr.n_1);
    fit.derived.insert("crossover_time".into(), gamma / (sigma * sigma));
    if !out.converged {
        return Err(fit_failed("flambaum_izrailev", format!("no convergence from Gamma0={g0:e}, sigma0={s0:e}")));
    }
    Ok(fit)
}

/// `A2 + (A1 - A2) / (1 + exp((x - x0) / dx))`.
pub fn boltzmann(a1: f64, a2: f64, x0: f64, dx: f64, x: f64) -> f64 {
    a2 + (a1 - a2) / (1.0 + ((x - x0) / dx).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum HalfMax {
    Crossed { time: f64 },
    /// The curve never fell to half of its maximum inside the window.
    RightCensored { last_time: f64, last_value: f64 },
}

impl HalfMax {
    pub fn time(self) -> Option<f64> {
        match self {
            HalfMax::Crossed { time } => Some(time),
            HalfMax::RightCensored { .. } => None,
        }
    }
}

/// First time after the maximum at which the curve reaches half of it,
/// by linear interpolation between the bracketing samples.
pub fn half_max_time(x: &[f64], y: &[f64]) -> Result<HalfMax> {
    check_xy(x, y, 2)?;
    let (imax, &ymax) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let half = ymax / 2.0;
    for i in imax + 1..y.len() {
        if y[i] <= half {
            let (x0, x1, y0, y1) = (x[i - 1], x[i], y[i - 1], y[i]);
            let time = if y0 == y1 { x1 } else { x0 + (x1 - x0) * (y0 - half) / (y0 - y1) };
            return Ok(HalfMax::Crossed { time });
        }
    }
    Ok(HalfMax::RightCensored { last_time: x[x.len() - 1], last_value: y[y.len() - 1] })
}

/// Four-parameter sigmoid fit. Reports the fit-independent half-maximum
/// time as `T_half` and, with `delta`, the self-time `delta * T_half`.
pub fn fit_boltzmann(x: &[f64], y: &[f64], delta: Option<f64>) -> Result<FitResult> {
    check_xy(x, y, 5)?;
    let half = half_max_time(x, y)?;
    let x0 = match half {
        HalfMax::Crossed { time } => time,
        HalfMax::RightCensored { .. } => {
            return Err(fit_failed("boltzmann", "right-censored: curve never reaches half maximum".into()))
        }
    };
    let span = x[x.len() - 1] - x[0];
    let model = |p: &[f64], t: f64| boltzmann(p[0], p[1], p[2], p[3], t);
    let (a1, a2) = (y[0], y[y.len() - 1].min(y[0] / 2.0));
    let starts = vec![vec![a1, a2, x0, span / 10.0], vec![a1, 0.0, x0, span / 20.0], vec![a1, a2, x0, span / 4.0]];
    let out = best_of(model, x, y, &starts);
    let mut fit = FitResult::new("boltzmann", &["A1", "A2", "x0", "dx"], &out, x.len());
    fit.derived.insert("T_half".into(), x0);
    if let Some(d) = delta {
        fit.derived.insert("T_half_self".into(), d * x0);
    }
    fit.flags.push(format!("initial guess x0={x0:.6e} from half maximum"));
    if !out.converged {
        return Err(fit_failed("boltzmann", format!("no convergence from x0={x0:e}")));
    }
    Ok(fit)
}

/// Minimum intensity counted as a populated coherence order.
pub const POPULATED_ORDER: f64 = 1e-9;

/// Width `N` of `S_q ~ exp(-q^2 / N^2)`, from a weighted linear fit of
/// `ln S_q` against `q^2`. With fewer than three populated `|q|` the width
/// falls back to `sqrt(sum q^2 S_q)` and the result is flagged.
pub fn fit_gaussian_orders(orders: &[i64], intensities: &[f64]) -> Result<FitResult> {
    if orders.len() != intensities.len() {
        return Err(SpinError::DimensionMismatch { left: orders.len(), right: intensities.len() });
    }
    let second: f64 = orders.iter().zip(intensities).map(|(&q, &s)| (q * q) as f64 * s).sum();
    let populated: Vec<(f64, f64)> = orders
        .iter()
        .zip(intensities)
        .filter(|(_, &s)| s > POPULATED_ORDER)
        .map(|(&q, &s)| ((q * q) as f64, s))
        .collect();
    let mut distinct: Vec<i64> = orders.iter().zip(intensities).filter(|(_, &s)| s > POPULATED_ORDER).map(|(q, _)| q.abs()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let mut derived = BTreeMap::new();
    derived.insert("second_moment".into(), second);
    if distinct.len() < 3 {
        let n = second.max(0.0).sqrt();
        let mut parameters = BTreeMap::new();
        parameters.insert("N".into(), Estimate { value: n, sigma: 0.0 });
        return Ok(FitResult {
            model: "gaussian_mqc".into(),
            parameters,
            residual_norm: 0.0,
            derived,
            n_points: populated.len(),
            converged: true,
            flags: vec!["fallback_sqrt_second_moment".into()],
        });
    }
    // ln S = ln A - q^2 / N^2, weights S^2 (inverse variance of ln S for
    // constant absolute noise)
    let xs: Vec<f64> = populated.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = populated.iter().map(|p| p.1.ln()).collect();
    let ws: Vec<f64> = populated.iter().map(|p| p.1 * p.1).collect();
    let lin = weighted_linear(&xs, &ys, &ws)?;
    if lin.slope >= 0.0 {
        return Err(fit_failed("gaussian_mqc", "intensities do not fall with order".into()));
    }
    let n = (-1.0 / lin.slope).sqrt();
    // dN/dslope = N^3 / 2
    let n_sigma = 0.5 * n.powi(3) * lin.slope_sigma;
    let mut parameters = BTreeMap::new();
    parameters.insert("N".into(), Estimate { value: n, sigma: n_sigma });
    parameters.insert("A".into(), Estimate { value: lin.intercept.exp(), sigma: lin.intercept.exp() * lin.intercept_sigma });
    Ok(FitResult {
        model: "gaussian_mqc".into(),
        parameters,
        residual_norm: lin.residual_norm,
        derived,
        n_points: populated.len(),
        converged: true,
        flags: Vec::new(),
    })
}

pub fn fit_gaussian_mqc(spectrum: &MQCSpectrum) -> Result<FitResult> {
    let mut fit = fit_gaussian_orders(&spectrum.orders, &spectrum.s_q)?;
    fit.derived.insert("t".into(), spectrum.t);
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_sigma: f64,
    pub intercept_sigma: f64,
    pub residual_norm: f64,
}

fn weighted_linear(x: &[f64], y: &[f64], w: &[f64]) -> Result<LinearFit> {
    check_xy(x, y, 2)?;
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| b * (a - mx).powi(2)).sum();
    if sxx.is_nan() || sxx <= 0.0 || x.iter().all(|v| *v == x[0]) {
        return Err(SpinError::DegenerateAbscissa);
    }
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((a, c), b)| b * (a - mx) * (c - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).zip(w).map(|((a, c), b)| b * (c - intercept - slope * a).powi(2)).sum();
    let n = x.len() as f64;
    let dof = (n - 2.0).max(1.0);
    // weights treated as relative: scale the variance by the weighted residual
    let s2 = rss / dof;
    let slope_sigma = (s2 / sxx).sqrt();
    let intercept_sigma = (s2 * (1.0 / sw + mx * mx / sxx)).sqrt();
    Ok(LinearFit { slope, intercept, slope_sigma, intercept_sigma, residual_norm: rss.sqrt() })
}

/// Ordinary least squares `y = slope x + intercept` with standard errors.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    check_xy(x, y, 3)?;
    weighted_linear(x, y, &vec![1.0; x.len()])
}

/// `N = A x^b`, fitted as a line in log-log space.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<FitResult> {
    check_xy(x, y, 4)?;
    if x.iter().chain(y).any(|&v| v <= 0.0) {
        return Err(fit_failed("power_law", "log-log fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let lin = linear_fit(&lx, &ly)?;
    let a = lin.intercept.exp();
    let mut parameters = BTreeMap::new();
    parameters.insert("A".into(), Estimate { value: a, sigma: a * lin.intercept_sigma });
    parameters.insert("b".into(), Estimate { value: lin.slope, sigma: lin.slope_sigma });
    Ok(FitResult {
        model: "power_law".into(),
        parameters,
        residual_norm: lin.residual_norm,
        derived: BTreeMap::new(),
        n_points: x.len(),
        converged: true,
        flags: Vec::new(),
    })
}

/// `y = sqrt(R^2 + x^2)`, a one-parameter fit for the saturation level `R`.
pub fn fit_saturation(x: &[f64], y: &[f64]) -> Result<FitResult> {
    check_xy(x, y, 3)?;
    if x.iter().all(|v| *v == x[0]) {
        return Err(SpinError::DegenerateAbscissa);
    }
    let model = |p: &[f64], v: f64| (p[0] * p[0] + v * v).sqrt();
    // start from the smallest-x point, where R dominates
    let (i0, _) = x.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let r0 = (y[i0] * y[i0] - x[i0] * x[i0]).max(0.0).sqrt();
    let starts = vec![vec![r0.max(1e-3)], vec![0.5 * r0 + 1e-3], vec![2.0 * r0 + 1e-3]];
    let out = best_of(model, x, y, &starts);
    let mut fit = FitResult::new("saturation", &["R"], &out, x.len());
    fit.parameters.get_mut("R").unwrap().value = out.params[0].abs();
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_anchors() {
        assert_eq!(sinc(0.0), 1.0);
        assert!((abragam(0.0, 2.0, 0.5) - (-0.5f64).exp()).abs() < 1e-15);
        assert!((abragam_t2(0.0, 4.0) - 0.25).abs() < 1e-15);
        for (g, s) in [(2.08, 0.708), (0.1, 3.0), (5.0, 0.01)] {
            assert_eq!(flambaum_izrailev(g, s, 0.0), 1.0);
        }
        assert_eq!(boltzmann(1.0, 0.0, 2.0, 0.3, 2.0), 0.5);
    }

    #[test]
    fn flambaum_izrailev_limits() {
        // sigma -> infinity: exp(-2 Gamma t)
        let (g, t) = (1.7, 0.8);
        assert!((flambaum_izrailev(g, 1e9, t) - (-2.0 * g * t).exp()).abs() < 1e-9);
        // short times: exp(-sigma^2 t^2)
        let (g, s, t) = (2.0, 0.5, 1e-3);
        assert!((flambaum_izrailev(g, s, t).ln() + s * s * t * t).abs() < 1e-9 * s * s * t * t + 1e-15);
    }

    #[test]
    fn half_max_cases() {
        let x = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(half_max_time(&x, &[1.0, 0.8, 0.4, 0.1]).unwrap(), HalfMax::Crossed { time: 1.75 });
        assert!(matches!(half_max_time(&x, &[1.0; 4]).unwrap(), HalfMax::RightCensored { .. }));
        let scaled = half_max_time(&x, &[3.0, 2.4, 1.2, 0.3]).unwrap();
        assert_eq!(scaled, HalfMax::Crossed { time: 1.75 });
    }

    #[test]
    fn fgr_anchors() {
        assert!((fgr_rate(PI, 1.0).unwrap().sigma_1 - 1.0).abs() < 1e-15);
        assert!(fgr_rate(0.0, 1.0).is_err());
        assert!(fgr_rate(-1.0, 1.0).is_err());
    }

    #[test]
    fn linear_exact_and_degenerate() {
        let x: Vec<f64> = (0..6).map(|k| 0.1 * k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 26.77 * v - 0.71).collect();
        let l = linear_fit(&x, &y).unwrap();
        assert!((l.slope - 26.77).abs() < 1e-10 && (l.intercept + 0.71).abs() < 1e-10);
        assert_eq!(linear_fit(&[1.0; 4], &[1.0, 2.0, 3.0, 4.0]).unwrap_err(), SpinError::DegenerateAbscissa);
    }

    #[test]
    fn gaussian_fallback_for_two_orders() {
        let fit = fit_gaussian_orders(&[-2, 0, 2], &[0.1, 0.8, 0.1]).unwrap();
        assert_eq!(fit.flags, vec!["fallback_sqrt_second_moment".to_string()]);
        assert!((fit.value("N") - 0.8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fit_result_json_round_trip() {
        let x: Vec<f64> = (1..10).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(1.5)).collect();
        let fit = fit_power_law(&x, &y).unwrap();
        let text = serde_json::to_string(&fit).unwrap();
        let back: FitResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back, fit);
        assert!((fit.value("b") - 1.5).abs() < 1e-12);
    }
}
