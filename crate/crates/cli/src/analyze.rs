// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Fits over stored run results.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use spinscale_core::analysis::{
    fit_abragam, fit_boltzmann, fit_flambaum_izrailev, fit_gaussian_mqc, fit_power_law, fit_saturation, half_max_time, linear_fit,
    Estimate, FitResult,
};

use crate::error::{CliError, CliResult};
use crate::io::write_json;
use crate::run::{CellData, ResultRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Decay `P(t)`.
    Abragam,
    /// Zero-scaling echo `M0(t)`.
    FlambaumIzrailev,
    /// Normalized echo.
    Boltzmann,
    /// Each MQC spectrum.
    GaussianMqc,
    /// Spin count against self-time, per cell.
    PowerLaw,
    /// `T2/T3` against `T2/T_Sigma` across cells.
    Saturation,
    /// `1/T2` against scaling across cells.
    Linear,
}

impl Model {
    pub const ALL: [Model; 7] = [
        Model::Abragam,
        Model::FlambaumIzrailev,
        Model::Boltzmann,
        Model::GaussianMqc,
        Model::PowerLaw,
        Model::Saturation,
        Model::Linear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::Abragam => "abragam",
            Model::FlambaumIzrailev => "flambaum_izrailev",
            Model::Boltzmann => "boltzmann",
            Model::GaussianMqc => "gaussian_mqc",
            Model::PowerLaw => "power_law",
            Model::Saturation => "saturation",
            Model::Linear => "linear",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown model `{s}`, expected one of {}", Model::ALL.map(Model::name).join(", ")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFit {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Spectrum time for per-spectrum fits, seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    pub fit: FitResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub label: String,
    pub reason: String,
}

/// Contents of `fits/<model>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFits {
    pub model: Model,
    pub config_hash: String,
    pub fits: Vec<LabeledFit>,
    pub skipped: Vec<Skipped>,
}

/// Half-maximum times feeding the saturation plot, seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationPoint {
    pub label: String,
    pub delta: f64,
    pub tau: Option<f64>,
    pub t2: f64,
    pub t3: f64,
    pub t_sigma: f64,
}

impl SaturationPoint {
    pub fn x(&self) -> f64 {
        self.t2 / self.t_sigma
    }

    pub fn y(&self) -> f64 {
        self.t2 / self.t3
    }
}

fn labeled(c: &CellData, time: Option<f64>, fit: FitResult) -> LabeledFit {
    LabeledFit { label: c.label.clone(), delta: Some(c.cell.delta), tau: c.cell.tau, time, fit }
}

fn skip(label: &str, reason: impl ToString) -> Skipped {
    Skipped { label: label.into(), reason: reason.to_string() }
}

/// `T2` from the Abragam fit of every cell with a decay curve.
pub fn t2_values(cells: &[CellData]) -> (Vec<(usize, f64)>, Vec<Skipped>) {
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        let Some(p) = c.curve("P") else { continue };
        match fit_abragam(&p.times, &p.values, Some(c.cell.delta).filter(|d| *d > 0.0)) {
            Ok(f) => out.push((i, f.derived_value("T2").expect("abragam reports T2"))),
            Err(e) => skipped.push(skip(&c.label, e)),
        }
    }
    (out, skipped)
}

/// Saturation inputs for every cell with `P`, `M` and `M0` curves.
pub fn saturation_points(cells: &[CellData]) -> (Vec<SaturationPoint>, Vec<Skipped>) {
    let (t2s, mut skipped) = t2_values(cells);
    let mut points = Vec::new();
    for (i, t2) in t2s {
        let c = &cells[i];
        let (Some(m), Some(m0)) = (c.curve("M"), c.curve("M0")) else { continue };
        let half = |curve: &spinscale_core::protocols::SignalCurve, name: &str| -> Result<f64, String> {
            half_max_time(&curve.times, &curve.values)
                .map_err(|e| e.to_string())?
                .time()
                .ok_or_else(|| format!("{name} never reaches half maximum"))
        };
        match (half(m, "M"), half(m0, "M0")) {
            (Ok(t3), Ok(t_sigma)) => {
                points.push(SaturationPoint { label: c.label.clone(), delta: c.cell.delta, tau: c.cell.tau, t2, t3, t_sigma })
            }
            (Err(e), _) | (_, Err(e)) => skipped.push(skip(&c.label, e)),
        }
    }
    (points, skipped)
}

/// `(self-time, N)` pairs of a cell's spectra at positive times.
pub fn spin_counts(c: &CellData) -> Vec<(f64, f64, FitResult)> {
    c.spectra
        .iter()
        .filter(|s| s.t > 0.0)
        .filter_map(|s| fit_gaussian_mqc(s).ok().map(|f| (s.t * c.cell.delta, f.value("N"), f)))
        .collect()
}

pub fn fit_model(model: Model, record: &ResultRecord, cells: &[CellData]) -> CliResult<ModelFits> {
    let mut fits = Vec::new();
    let mut skipped = Vec::new();
    let mut matched = 0usize;
    match model {
        Model::Abragam => {
            for c in cells {
                let Some(p) = c.curve("P") else { continue };
                matched += 1;
                match fit_abragam(&p.times, &p.values, Some(c.cell.delta).filter(|d| *d > 0.0)) {
                    Ok(f) => fits.push(labeled(c, None, f)),
                    Err(e) => skipped.push(skip(&c.label, e)),
                }
            }
        }
        Model::FlambaumIzrailev => {
            for c in cells {
                let Some(m0) = c.curve("M0") else { continue };
                matched += 1;
                match fit_flambaum_izrailev(&m0.times, &m0.values) {
                    Ok(f) => fits.push(labeled(c, None, f)),
                    Err(e) => skipped.push(skip(&c.label, e)),
                }
            }
        }
        Model::Boltzmann => {
            for c in cells {
                let Some(n) = c.curve("M_normalized") else { continue };
                matched += 1;
                match fit_boltzmann(&n.times, &n.values, Some(c.cell.delta)) {
                    Ok(f) => fits.push(labeled(c, None, f)),
                    Err(e) => skipped.push(skip(&c.label, e)),
                }
            }
        }
        Model::GaussianMqc => {
            for c in cells {
                for s in &c.spectra {
                    matched += 1;
                    match fit_gaussian_mqc(s) {
                        Ok(f) => fits.push(labeled(c, Some(s.t), f)),
                        Err(e) => skipped.push(skip(&format!("{}@{:e}", c.label, s.t), e)),
                    }
                }
            }
        }
        Model::PowerLaw => {
            for c in cells.iter().filter(|c| !c.spectra.is_empty()) {
                matched += 1;
                let pts: Vec<(f64, f64)> = spin_counts(c).into_iter().map(|(x, n, _)| (x, n)).filter(|(_, n)| *n > 0.0).collect();
                let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                if x.len() < 4 {
                    skipped.push(skip(&c.label, format!("power law needs at least 4 points, got {}", x.len())));
                    continue;
                }
                match fit_power_law(&x, &y) {
                    Ok(f) => fits.push(labeled(c, None, f)),
                    Err(e) => skipped.push(skip(&c.label, e)),
                }
            }
        }
        Model::Saturation => {
            let (points, s) = saturation_points(cells);
            skipped.extend(s);
            matched = cells.iter().filter(|c| c.curve("M0").is_some()).count();
            if matched > 0 {
                let x: Vec<f64> = points.iter().map(SaturationPoint::x).collect();
                let y: Vec<f64> = points.iter().map(SaturationPoint::y).collect();
                match fit_saturation(&x, &y) {
                    Ok(f) => fits.push(LabeledFit { label: "all".into(), delta: None, tau: None, time: None, fit: f }),
                    Err(e) => skipped.push(skip("all", e)),
                }
            }
        }
        Model::Linear => {
            let (t2s, s) = t2_values(cells);
            skipped.extend(s);
            matched = cells.iter().filter(|c| c.curve("P").is_some()).count();
            if matched > 0 {
                let x: Vec<f64> = t2s.iter().map(|(i, _)| cells[*i].cell.delta).collect();
                let y: Vec<f64> = t2s.iter().map(|(_, t2)| 1.0 / t2).collect();
                match linear_fit(&x, &y) {
                    Ok(l) => fits.push(LabeledFit { label: "all".into(), delta: None, tau: None, time: None, fit: linear_result(&l, x.len()) }),
                    Err(e) => skipped.push(skip("all", e)),
                }
            }
        }
    }
    if matched == 0 {
        return Err(CliError::NoMatch(format!("model `{model}`")));
    }
    Ok(ModelFits { model, config_hash: record.config_hash.clone(), fits, skipped })
}

fn linear_result(l: &spinscale_core::analysis::LinearFit, n: usize) -> FitResult {
    FitResult {
        model: "linear".into(),
        parameters: [
            ("slope".to_string(), Estimate { value: l.slope, sigma: l.slope_sigma }),
            ("intercept".to_string(), Estimate { value: l.intercept, sigma: l.intercept_sigma }),
        ]
        .into_iter()
        .collect(),
        residual_norm: l.residual_norm,
        derived: Default::default(),
        n_points: n,
        converged: true,
        flags: Vec::new(),
    }
}

/// Fit every requested model and write `fits/<model>.json`.
pub fn analyze(results: &Path, models: &[Model]) -> CliResult<Vec<(Model, PathBuf, ModelFits)>> {
    let record = ResultRecord::load(results)?;
    let cells = record.load_cells(results)?;
    if cells.is_empty() {
        return Err(CliError::NoMatch("any model: results contain no cells".into()));
    }
    let mut out = Vec::new();
    for &m in models {
        let fits = fit_model(m, &record, &cells)?;
        let path = results.join("fits").join(format!("{}.json", m.name()));
        write_json(&path, &fits)?;
        out.push((m, path, fits));
    }
    Ok(out)
}
