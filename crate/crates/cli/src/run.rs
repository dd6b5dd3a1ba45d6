// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Sweep execution with per-cell caching and ordered output assembly.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use spinscale_core::exec::{try_map_ordered, Execution};
use spinscale_core::hamiltonians::HamiltonianSpec;
use spinscale_core::protocols::{
    loschmidt_echo, magnetization_decay, mqc_series, normalized_echo, self_time_collapse, CollapseReport, Dynamics, MQCSpectrum,
    SignalCurve,
};
use spinscale_core::sequence::{build_sequence, Direction, PulseSequence, RegistryRecord, SequenceRegistry};
use spinscale_core::spin::SpinSystem;

use crate::config::{canonical_hash, Cell, ExperimentConfig, Mode, ProtocolConfig, TimeGrid};
use crate::error::{CliError, CliResult};
use crate::io::{read_json, write_json, CsvTable};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const RESULT_FILE: &str = "result.json";
const COLLAPSE_POINTS: usize = 200;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub force: bool,
    /// `None` uses every core.
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCurve {
    pub name: String,
    pub curve: SignalCurve,
}

/// Everything computed for one sweep cell; also the cache file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellData {
    pub label: String,
    pub cell: Cell,
    pub key_hash: String,
    pub key: serde_json::Value,
    pub curves: Vec<NamedCurve>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spectra: Vec<MQCSpectrum>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sequences: Vec<PulseSequence>,
}

impl CellData {
    pub fn curve(&self, name: &str) -> Option<&SignalCurve> {
        self.curves.iter().find(|c| c.name == name).map(|c| &c.curve)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub label: String,
    pub delta: f64,
    pub tau: Option<f64>,
    pub hash: String,
    pub curves_csv: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectra_csv: Option<String>,
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseSummary {
    pub curve: String,
    pub max_spread: f64,
    pub mean_spread: f64,
    pub points: usize,
}

/// Written to `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub tool_version: String,
    pub wall_clock_s: f64,
    pub protocol: String,
    pub config: ExperimentConfig,
    pub cells: Vec<CellEntry>,
    #[serde(default)]
    pub collapse: Option<CollapseSummary>,
}

impl ResultRecord {
    pub fn load(dir: &Path) -> CliResult<Self> {
        let path = dir.join(RESULT_FILE);
        if !path.exists() {
            return Err(CliError::MissingResults(format!("{} not found", path.display())));
        }
        read_json(&path)
    }

    /// Cell payloads in sweep order.
    pub fn load_cells(&self, dir: &Path) -> CliResult<Vec<CellData>> {
        self.cells.iter().map(|c| read_json(&cache_path(dir, &c.hash))).collect()
    }
}

fn cache_path(out: &Path, hash: &str) -> PathBuf {
    out.join("cells").join(format!("{hash}.json"))
}

/// Main curve of a protocol, the one collapsed and plotted against self-time.
pub fn primary_curve(protocol: &ProtocolConfig) -> &'static str {
    match protocol {
        ProtocolConfig::Decay => "P",
        ProtocolConfig::Echo { reference: true, .. } => "M_normalized",
        ProtocolConfig::Echo { .. } | ProtocolConfig::Mqc { .. } => "M",
    }
}

/// Apply command-line overrides and revalidate.
pub fn effective_config(mut cfg: ExperimentConfig, opts: &RunOptions) -> CliResult<ExperimentConfig> {
    if let Some(seed) = opts.seed {
        cfg.system.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Execute the sweep into `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path, opts: &RunOptions) -> CliResult<ResultRecord> {
    let start = Instant::now();
    let cfg = effective_config(cfg.clone(), opts)?;
    std::fs::create_dir_all(out.join("cells")).map_err(|e| CliError::io(out, e))?;
    std::fs::create_dir_all(out.join("curves")).map_err(|e| CliError::io(out, e))?;
    let system = cfg.build_system()?;
    let cells = cfg.cells();
    let exec = Execution::with_workers(opts.workers);

    // Resolve cache hits up front so the parallel section only computes.
    let mut jobs: Vec<(Cell, serde_json::Value, String, Option<CellData>)> = Vec::with_capacity(cells.len());
    for &cell in &cells {
        let key = cell_key(&cfg, &cell);
        let hash = canonical_hash(&key);
        let path = cache_path(out, &hash);
        let cached = if !opts.force && path.exists() {
            let data: CellData = read_json(&path)?;
            if data.key != key {
                return Err(CliError::CacheCollision { path });
            }
            Some(data)
        } else {
            None
        };
        jobs.push((cell, key, hash, cached));
    }
    let computed: Vec<CellData> = try_map_ordered(exec, &jobs, |(cell, key, hash, cached)| -> CliResult<CellData> {
        match cached {
            Some(data) => Ok(data.clone()),
            None => compute_cell(&cfg, &system, cell, key.clone(), hash.clone()),
        }
    })?;

    let mut entries = Vec::with_capacity(computed.len());
    for ((_, _, hash, cached), data) in jobs.iter().zip(&computed) {
        if cached.is_none() {
            write_json(&cache_path(out, hash), data)?;
        }
        let curves_csv = format!("curves/{}.csv", data.label);
        curve_table(data).write(&out.join(&curves_csv))?;
        let spectra_csv = if data.spectra.is_empty() {
            None
        } else {
            std::fs::create_dir_all(out.join("spectra")).map_err(|e| CliError::io(out, e))?;
            let rel = format!("spectra/{}.csv", data.label);
            spectra_table(&data.spectra).write(&out.join(&rel))?;
            Some(rel)
        };
        entries.push(CellEntry {
            label: data.label.clone(),
            delta: data.cell.delta,
            tau: data.cell.tau,
            hash: hash.clone(),
            curves_csv,
            spectra_csv,
            cached: cached.is_some(),
        });
    }

    let collapse = collapse_report(&cfg, &computed)?;
    if let Some(report) = &collapse {
        let mut t = CsvTable::new(&["self_time (s)", "spread (1)"]);
        for (x, s) in report.grid.iter().zip(&report.spread) {
            t.push(vec![*x, *s]);
        }
        t.write(&out.join("collapse.csv"))?;
    }

    let registry_path = cfg.output.registry.clone().unwrap_or_else(|| out.join("sequences.json"));
    let mut registry = SequenceRegistry::open(&registry_path)?;
    if cfg.sequence.mode == Mode::Pulsed {
        // The registry holds the nominal sequence; pulse errors only enter the dynamics.
        for cell in &cells {
            for mut spec in cfg.sequence_specs(cell) {
                spec.error = Default::default();
                registry.append(RegistryRecord::from_sequence(&build_sequence(&spec)?)?)?;
            }
        }
    }

    let record = ResultRecord {
        config_hash: cfg.hash(),
        tool_version: TOOL_VERSION.into(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        protocol: cfg.protocol.name().into(),
        collapse: collapse.map(|r| CollapseSummary {
            curve: primary_curve(&cfg.protocol).into(),
            max_spread: r.max_spread,
            mean_spread: r.mean_spread,
            points: r.grid.len(),
        }),
        config: cfg,
        cells: entries,
    };
    write_json(&out.join(RESULT_FILE), &record)?;
    Ok(record)
}

/// Collapse of the primary curve across cells with non-zero scaling.
fn collapse_report(cfg: &ExperimentConfig, cells: &[CellData]) -> CliResult<Option<CollapseReport>> {
    let name = primary_curve(&cfg.protocol);
    let curves: Vec<SignalCurve> =
        cells.iter().filter(|c| c.cell.delta != 0.0).filter_map(|c| c.curve(name).cloned()).collect();
    if curves.len() < 2 {
        return Ok(None);
    }
    match self_time_collapse(&curves, COLLAPSE_POINTS, None) {
        Ok(r) => Ok(Some(r)),
        Err(spinscale_core::SpinError::NoOverlap) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Everything that determines a cell's numbers.
fn cell_key(cfg: &ExperimentConfig, cell: &Cell) -> serde_json::Value {
    serde_json::json!({
        "tool_version": TOOL_VERSION,
        "system": cfg.system,
        "mode": cfg.sequence.mode,
        "cell": cell,
        "sequences": cfg.sequence_specs(cell),
        "direction": cfg.sequence.direction,
        "protocol": cfg.protocol,
        "time_grid": cfg.time_grid,
    })
}

/// Laboratory sample times; pulsed runs snap to whole cycles.
pub fn cell_times(grid: &TimeGrid, delta: f64, cycle_time: Option<f64>) -> Vec<f64> {
    let raw: Vec<f64> = match *grid {
        TimeGrid::Linear { stop, points } => (0..points).map(|k| stop * k as f64 / (points - 1) as f64).collect(),
        TimeGrid::SelfTime { stop, points } => {
            (0..points).map(|k| stop * k as f64 / (points - 1) as f64 / delta.abs()).collect()
        }
        TimeGrid::Cycles { count, stride } => {
            let tc = cycle_time.expect("cycles grid on a pulsed run");
            return (0..count).map(|k| (k * stride) as f64 * tc).collect();
        }
    };
    match cycle_time {
        Some(tc) => raw.iter().map(|t| (t / tc).round() * tc).collect(),
        None => raw,
    }
}

fn ideal_forward(cfg: &ExperimentConfig, delta: f64) -> Dynamics {
    let sign = if matches!(cfg.protocol, ProtocolConfig::Decay) && cfg.sequence.direction == Direction::Backward {
        -1.0
    } else {
        1.0
    };
    Dynamics::scaled(sign * delta)
}

fn ideal_backward(delta: f64, perturbation: &Option<HamiltonianSpec>) -> Dynamics {
    match perturbation {
        None => Dynamics::scaled(-delta),
        Some(p) => Dynamics::Ideal {
            hamiltonian: HamiltonianSpec::Composite { terms: vec![HamiltonianSpec::scaled_y(-delta), p.clone()] },
        },
    }
}

fn compute_cell(cfg: &ExperimentConfig, system: &SpinSystem, cell: &Cell, key: serde_json::Value, key_hash: String) -> CliResult<CellData> {
    let sequences: Vec<PulseSequence> =
        cfg.sequence_specs(cell).iter().map(build_sequence).collect::<spinscale_core::Result<_>>()?;
    let pulsed = cfg.sequence.mode == Mode::Pulsed;
    let times = cell_times(&cfg.time_grid, cell.delta, sequences.first().map(|s| s.cycle_time));
    let dynamics = |i: usize, ideal: Dynamics| if pulsed { Dynamics::pulsed(sequences[i].clone()) } else { ideal };
    let perturbation = match &cfg.protocol {
        ProtocolConfig::Echo { perturbation, .. } | ProtocolConfig::Mqc { perturbation, .. } => perturbation.clone(),
        ProtocolConfig::Decay => None,
    };
    let named = |name: &str, curve: SignalCurve| NamedCurve { name: name.into(), curve: with_error(cfg, curve) };
    let mut curves = Vec::new();
    let mut spectra = Vec::new();
    match &cfg.protocol {
        ProtocolConfig::Decay => {
            let d = dynamics(0, ideal_forward(cfg, cell.delta));
            curves.push(named("P", magnetization_decay(system, &d, &times)?));
        }
        ProtocolConfig::Echo { reference, .. } => {
            let fwd = dynamics(0, Dynamics::scaled(cell.delta));
            let bwd = dynamics(1, ideal_backward(cell.delta, &perturbation));
            let m = loschmidt_echo(system, &fwd, &bwd, &times)?;
            let p = magnetization_decay(system, &fwd, &times)?;
            curves.push(named("M", m.clone()));
            if *reference {
                let f0 = dynamics(2, Dynamics::scaled(0.0));
                let b0 = dynamics(3, ideal_backward(0.0, &perturbation));
                let mut m0 = loschmidt_echo(system, &f0, &b0, &times)?;
                // the reference shares the scaled cell's self-time axis
                m0.self_times = m.self_times.clone();
                let norm = normalized_echo(&m, &m0)?;
                curves.push(named("M0", m0));
                curves.push(named("M_normalized", norm));
            }
            curves.push(named("P", p));
        }
        ProtocolConfig::Mqc { q_steps, .. } => {
            let fwd = dynamics(0, Dynamics::scaled(cell.delta));
            let bwd = dynamics(1, ideal_backward(cell.delta, &perturbation));
            spectra = mqc_series(system, &fwd, &bwd, &times, *q_steps)?;
            let meta = loschmidt_echo(system, &fwd, &bwd, &times[..1])?.meta;
            let m = SignalCurve::new(times.clone(), spectra.iter().map(|s| s.total()).collect(), meta.clone());
            let q2 = SignalCurve::new(times.clone(), spectra.iter().map(|s| s.second_moment).collect(), meta);
            curves.push(named("M", m));
            curves.push(named("second_moment", q2));
        }
    }
    Ok(CellData { label: cell.label(), cell: *cell, key_hash, key, curves, spectra, sequences })
}

fn with_error(cfg: &ExperimentConfig, curve: SignalCurve) -> SignalCurve {
    if cfg.sequence.mode == Mode::Pulsed && !cfg.sequence.error.is_ideal() {
        curve.with_error_model(cfg.sequence.error)
    } else {
        curve
    }
}

fn curve_table(data: &CellData) -> CsvTable {
    let mut header = vec!["time (s)".to_string(), "self_time (s)".to_string()];
    header.extend(data.curves.iter().map(|c| format!("{} (1)", c.name)));
    let first = &data.curves[0].curve;
    let mut t = CsvTable::with_header(header);
    for i in 0..first.len() {
        let mut row = vec![first.times[i], first.self_times[i]];
        row.extend(data.curves.iter().map(|c| c.curve.values[i]));
        t.push(row);
    }
    t
}

fn spectra_table(spectra: &[MQCSpectrum]) -> CsvTable {
    let mut t = CsvTable::new(&["time (s)", "q (1)", "S_q (1)"]);
    for s in spectra {
        for (&q, &v) in s.orders.iter().zip(&s.s_q) {
            t.push(vec![s.t, q as f64, v]);
        }
    }
    t
}

