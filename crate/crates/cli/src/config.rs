// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration: JSON schema, validation and hashing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spinscale_core::hamiltonians::HamiltonianSpec;
use spinscale_core::sequence::{build_sequence, Direction, ErrorModel, Phase, SequenceKind, SequenceSpec, DEFAULT_MIN_SEPARATION};
use spinscale_core::spin::{CouplingRule, SpinSystem};
use spinscale_core::MAX_SPINS;

use crate::error::{from_validation, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub system: SystemConfig,
    pub sequence: SequenceConfig,
    pub protocol: ProtocolConfig,
    pub time_grid: TimeGrid,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Geometry {
    /// Sites drawn from a simple-cubic box, see `SpinSystem::random_cluster`.
    RandomCluster,
    Chain {
        #[serde(default = "one")]
        spacing: f64,
    },
    Cubic { nx: usize, ny: usize, nz: usize },
}

fn one() -> f64 {
    1.0
}

fn default_rule() -> CouplingRule {
    CouplingRule::DipolarAngular
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub geometry: Geometry,
    #[serde(default = "default_rule")]
    pub rule: CouplingRule,
    pub n_spins: usize,
    /// Coupling prefactor, rad/s.
    #[serde(default = "one")]
    pub scale: f64,
    /// Rescale couplings to this rms local coupling, rad/s.
    #[serde(default)]
    pub rms_coupling: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Per-spin Zeeman offsets, rad/s.
    #[serde(default)]
    pub zeeman_offsets: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Exact pulse cycles, sampled stroboscopically.
    #[default]
    Pulsed,
    /// Continuous evolution under `delta H_d^y`.
    Ideal,
}

fn default_kind() -> SequenceKind {
    SequenceKind::P8
}

fn default_direction() -> Direction {
    Direction::Forward
}

fn default_min_separation() -> f64 {
    DEFAULT_MIN_SEPARATION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_kind")]
    pub kind: SequenceKind,
    pub deltas: Vec<f64>,
    /// Seconds; required for pulsed runs.
    #[serde(default)]
    pub taus: Vec<f64>,
    #[serde(default = "default_direction")]
    pub direction: Direction,
    #[serde(default)]
    pub error: ErrorModel,
    #[serde(default = "default_min_separation")]
    pub min_separation: f64,
    #[serde(default)]
    pub phases: Option<Vec<Phase>>,
}

fn default_q() -> usize {
    32
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolConfig {
    /// Free decay `P(t)` under the configured sequence.
    Decay,
    /// Forward block then backward block, plus the zero-scaling reference.
    Echo {
        #[serde(default = "yes")]
        reference: bool,
        /// Ideal mode only: added to the backward Hamiltonian.
        #[serde(default)]
        perturbation: Option<HamiltonianSpec>,
    },
    /// Multiple-quantum spectra of the echo.
    Mqc {
        #[serde(default = "default_q")]
        q_steps: usize,
        #[serde(default)]
        perturbation: Option<HamiltonianSpec>,
    },
}

impl ProtocolConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolConfig::Decay => "decay",
            ProtocolConfig::Echo { .. } => "echo",
            ProtocolConfig::Mqc { .. } => "mqc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeGrid {
    /// `points` laboratory times evenly spanning `[0, stop]` seconds.
    Linear { stop: f64, points: usize },
    /// `points` self-times evenly spanning `[0, stop]` seconds, `t = s / delta`.
    SelfTime { stop: f64, points: usize },
    /// `t = k * stride * t_c` for `k = 0..count`; pulsed runs only.
    Cycles {
        count: usize,
        #[serde(default = "one_usize")]
        stride: usize,
    },
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub registry: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Parse and validate. Schema errors carry the path of the offending key.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::validation(if path.is_empty() { ".".into() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// sha256 of the canonical JSON (sorted keys), so key order is irrelevant.
    pub fn hash(&self) -> String {
        canonical_hash(self)
    }

    pub fn validate(&self) -> CliResult<()> {
        let s = &self.system;
        if s.n_spins == 0 {
            return Err(CliError::validation("system.n_spins", "must be at least 1"));
        }
        if s.n_spins > MAX_SPINS {
            return Err(CliError::validation(
                "system.n_spins",
                format!("capacity exceeded: {} spins requested, dense backend supports at most {MAX_SPINS}", s.n_spins),
            ));
        }
        if !(s.scale.is_finite() && s.scale > 0.0) {
            return Err(CliError::validation("system.scale", "must be positive"));
        }
        if let Some(r) = s.rms_coupling {
            if !(r.is_finite() && r > 0.0) {
                return Err(CliError::validation("system.rms_coupling", "must be positive"));
            }
        }
        if let Some(off) = &s.zeeman_offsets {
            if off.len() != s.n_spins {
                return Err(CliError::validation(
                    "system.zeeman_offsets",
                    format!("expected {} entries, got {}", s.n_spins, off.len()),
                ));
            }
            if let Some(i) = off.iter().position(|v| !v.is_finite()) {
                return Err(CliError::validation(format!("system.zeeman_offsets[{i}]"), "must be finite"));
            }
        }
        if let Geometry::Cubic { nx, ny, nz } = s.geometry {
            if nx * ny * nz != s.n_spins {
                return Err(CliError::validation("system.geometry", format!("{nx}x{ny}x{nz} sites do not match n_spins")));
            }
        }
        if let Geometry::Chain { spacing } = s.geometry {
            if !(spacing.is_finite() && spacing > 0.0) {
                return Err(CliError::validation("system.geometry.spacing", "must be positive"));
            }
        }
        if s.n_spins < 2 {
            return Err(CliError::validation("system.n_spins", "coupled dynamics need at least 2 spins"));
        }

        let q = &self.sequence;
        if q.deltas.is_empty() {
            return Err(CliError::validation("sequence.deltas", "must not be empty"));
        }
        for (i, d) in q.deltas.iter().enumerate() {
            if !d.is_finite() {
                return Err(CliError::validation(format!("sequence.deltas[{i}]"), "must be finite"));
            }
        }
        if !(q.min_separation.is_finite() && q.min_separation >= 0.0) {
            return Err(CliError::validation("sequence.min_separation", "must be non-negative"));
        }
        match q.mode {
            Mode::Pulsed => {
                if q.taus.is_empty() {
                    return Err(CliError::validation("sequence.taus", "pulsed runs need at least one tau"));
                }
                for (i, t) in q.taus.iter().enumerate() {
                    if !(t.is_finite() && *t > 0.0) {
                        return Err(CliError::validation(format!("sequence.taus[{i}]"), "must be positive"));
                    }
                }
                if let Some(p) = &q.phases {
                    if p.len() != 8 {
                        return Err(CliError::validation("sequence.phases", "expected 8 phases"));
                    }
                }
                for cell in self.cells() {
                    for spec in self.sequence_specs(&cell) {
                        build_sequence(&spec).map_err(|e| from_validation("sequence", e))?;
                    }
                }
            }
            Mode::Ideal => {
                if matches!(self.time_grid, TimeGrid::Cycles { .. }) {
                    return Err(CliError::validation("time_grid.kind", "cycles grids need a pulsed run"));
                }
            }
        }
        if !matches!(self.protocol, ProtocolConfig::Decay)
            && q.mode == Mode::Pulsed
            && !matches!(q.kind, SequenceKind::P8 | SequenceKind::P16)
        {
            return Err(CliError::validation("sequence.kind", "echo protocols need p8 or p16 sequences"));
        }
        if !matches!(self.protocol, ProtocolConfig::Decay) && q.deltas.iter().any(|d| *d < 0.0) {
            return Err(CliError::validation("sequence.deltas", "echo scaling must be non-negative"));
        }
        match &self.protocol {
            ProtocolConfig::Mqc { q_steps, .. } if *q_steps < 2 || q_steps % 2 == 1 => {
                return Err(CliError::validation("protocol.q_steps", "must be even and at least 2"));
            }
            ProtocolConfig::Echo { perturbation: Some(_), .. } | ProtocolConfig::Mqc { perturbation: Some(_), .. }
                if q.mode == Mode::Pulsed =>
            {
                return Err(CliError::validation("protocol.perturbation", "only ideal runs take an explicit perturbation"));
            }
            _ => {}
        }
        match self.time_grid {
            TimeGrid::Linear { stop, points } | TimeGrid::SelfTime { stop, points } => {
                if !(stop.is_finite() && stop > 0.0) {
                    return Err(CliError::validation("time_grid.stop", "must be positive"));
                }
                if points < 2 {
                    return Err(CliError::validation("time_grid.points", "must be at least 2"));
                }
                if matches!(self.time_grid, TimeGrid::SelfTime { .. }) && q.deltas.contains(&0.0) {
                    return Err(CliError::validation("time_grid.kind", "self-time grids need non-zero scaling"));
                }
            }
            TimeGrid::Cycles { count, stride } => {
                if count < 2 || stride == 0 {
                    return Err(CliError::validation("time_grid", "count must be at least 2 and stride positive"));
                }
            }
        }
        self.build_system().map_err(|e| CliError::validation("system", e.to_string()))?;
        Ok(())
    }

    pub fn build_system(&self) -> spinscale_core::Result<SpinSystem> {
        let s = &self.system;
        let mut sys = match s.geometry {
            Geometry::RandomCluster => SpinSystem::random_cluster(s.n_spins, s.scale, s.rule, s.seed)?,
            Geometry::Chain { spacing } => SpinSystem::chain(s.n_spins, spacing, s.scale, s.rule)?,
            Geometry::Cubic { nx, ny, nz } => SpinSystem::cubic_cluster(nx, ny, nz, s.scale, s.rule)?,
        };
        if let Some(r) = s.rms_coupling {
            sys = sys.normalized_to(r)?;
        }
        if let Some(off) = &s.zeeman_offsets {
            sys = sys.with_zeeman_offsets(off.clone())?;
        }
        Ok(sys)
    }

    /// Sweep cells in output order: every delta, then every tau.
    pub fn cells(&self) -> Vec<Cell> {
        let taus: Vec<Option<f64>> = match self.sequence.mode {
            Mode::Pulsed => self.sequence.taus.iter().map(|t| Some(*t)).collect(),
            Mode::Ideal => vec![None],
        };
        self.sequence
            .deltas
            .iter()
            .flat_map(|&delta| taus.iter().map(move |&tau| Cell { delta, tau }))
            .collect()
    }

    /// Sequences a pulsed cell needs, main direction(s) first.
    pub fn sequence_specs(&self, cell: &Cell) -> Vec<SequenceSpec> {
        let Some(tau) = cell.tau else { return Vec::new() };
        let q = &self.sequence;
        let spec = |delta: f64, direction: Direction| SequenceSpec {
            kind: q.kind,
            delta,
            tau,
            direction,
            error: q.error,
            min_separation: q.min_separation,
            phases: q.phases.clone(),
        };
        let directions = if matches!(q.kind, SequenceKind::P8 | SequenceKind::P16) {
            (Direction::Forward, Direction::Backward)
        } else {
            (Direction::None, Direction::None)
        };
        match self.protocol {
            ProtocolConfig::Decay => vec![spec(cell.delta, if directions.0 == Direction::None { Direction::None } else { q.direction })],
            ProtocolConfig::Echo { reference, .. } => {
                let mut v = vec![spec(cell.delta, directions.0), spec(cell.delta, directions.1)];
                if reference {
                    v.push(spec(0.0, directions.0));
                    v.push(spec(0.0, directions.1));
                }
                v
            }
            ProtocolConfig::Mqc { .. } => vec![spec(cell.delta, directions.0), spec(cell.delta, directions.1)],
        }
    }
}

/// One point of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub delta: f64,
    /// Seconds; `None` for ideal runs.
    pub tau: Option<f64>,
}

impl Cell {
    pub fn label(&self) -> String {
        match self.tau {
            Some(t) => format!("delta{}_tau{:e}", self.delta, t),
            None => format!("delta{}_ideal", self.delta),
        }
    }
}

/// sha256 of `value` serialized with sorted object keys.
pub fn canonical_hash<T: Serialize>(value: &T) -> String {
    // serde_json's default map is ordered by key, which makes this canonical
    let v = serde_json::to_value(value).expect("serializable");
    hex::encode(Sha256::digest(v.to_string().as_bytes()))
}
