// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Measurement protocols: scaled magnetization decay, Loschmidt echo, MQC
//! encoding and OTOC extraction, self-time collapse.
//!
//! Correlators are normalized by `Tr[(I^z)^2]`, so every signal starts at 1.

mod mqc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpinError};
use crate::hamiltonians::HamiltonianSpec;
use crate::sequence::{CycleBuilder, ErrorModel, PulseSequence, SequenceKind};
use crate::spin::linalg::{conjugate, conjugate_adjoint, matmul};
use crate::spin::{collective_operator, correlator_norm, trace_product, Axis, OperatorMatrix, Propagator, SpinSystem, C64};

pub use mqc::{direct_oto_commutator, mqc_series, mqc_spectrum, otoc_second_moment, MQCSpectrum, ALIAS_GUARD};

/// What drives the spins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Dynamics {
    /// Continuous evolution under a fixed Hamiltonian.
    Ideal { hamiltonian: HamiltonianSpec },
    /// Stroboscopic evolution under repeated exact cycles.
    Pulsed { sequence: PulseSequence },
}

impl Dynamics {
    /// `delta H_d^y`.
    pub fn scaled(delta: f64) -> Self {
        Dynamics::Ideal { hamiltonian: HamiltonianSpec::scaled_y(delta) }
    }

    pub fn pulsed(sequence: PulseSequence) -> Self {
        Dynamics::Pulsed { sequence }
    }

    /// Magnitude of the dipolar scaling, the clock of the self-time axis.
    pub fn scaling(&self) -> f64 {
        match self {
            Dynamics::Pulsed { sequence } => sequence.delta.abs(),
            Dynamics::Ideal { hamiltonian } => hamiltonian_scaling(hamiltonian).unwrap_or(1.0),
        }
    }

    pub fn cycle_time(&self) -> Option<f64> {
        match self {
            Dynamics::Pulsed { sequence } => Some(sequence.cycle_time),
            Dynamics::Ideal { .. } => None,
        }
    }

    fn meta(&self, n_spins: usize, label: &str) -> CurveMeta {
        match self {
            Dynamics::Pulsed { sequence } => CurveMeta {
                label: label.into(),
                delta: sequence.delta.abs(),
                tau: Some(sequence.tau),
                kind: Some(sequence.kind),
                error: None,
                n_spins,
            },
            Dynamics::Ideal { .. } => {
                CurveMeta { label: label.into(), delta: self.scaling(), tau: None, kind: None, error: None, n_spins }
            }
        }
    }
}

/// `|scale|` of the `H_d^y` term, looking through composites.
fn hamiltonian_scaling(h: &HamiltonianSpec) -> Option<f64> {
    match h {
        HamiltonianSpec::DipolarSecular { axis: Axis::Y, scale } => Some(scale.abs()),
        HamiltonianSpec::Composite { terms } => terms.iter().find_map(hamiltonian_scaling),
        _ => None,
    }
}

/// Provenance carried by every curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub label: String,
    pub delta: f64,
    pub tau: Option<f64>,
    pub kind: Option<SequenceKind>,
    pub error: Option<ErrorModel>,
    pub n_spins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalCurve {
    /// Laboratory times, seconds.
    pub times: Vec<f64>,
    /// `delta * t`, seconds.
    pub self_times: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: CurveMeta,
}

impl SignalCurve {
    pub fn new(times: Vec<f64>, values: Vec<f64>, meta: CurveMeta) -> Self {
        let self_times = times.iter().map(|t| t * meta.delta).collect();
        Self { times, self_times, values, meta }
    }

    pub fn with_error_model(mut self, error: ErrorModel) -> Self {
        self.meta.error = Some(error);
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Evolution of one operator along a non-decreasing time grid.
enum Trajectory {
    /// `op` is held in the eigenbasis of the propagator.
    Spectral { propagator: Propagator, op: DMatrix<C64>, sign: f64 },
    Stroboscopic { powers: CyclePowers, cycle_time: f64, state: DMatrix<C64>, step: u64, heisenberg: bool },
}

/// `U^k` for the cycle propagator `U`; the last power is kept since grids
/// usually advance by a constant stride.
struct CyclePowers {
    cycle: DMatrix<C64>,
    last: Option<(u64, DMatrix<C64>)>,
}

impl CyclePowers {
    fn new(cycle: DMatrix<C64>) -> Self {
        Self { cycle, last: None }
    }

    fn get(&mut self, k: u64) -> &DMatrix<C64> {
        if k == 1 {
            return &self.cycle;
        }
        if self.last.as_ref().map(|(j, _)| *j) != Some(k) {
            let dim = self.cycle.nrows();
            let mut acc = DMatrix::<C64>::identity(dim, dim);
            let mut base = self.cycle.clone();
            let mut e = k;
            while e > 0 {
                if e & 1 == 1 {
                    acc = matmul(&base, &acc);
                }
                e >>= 1;
                if e > 0 {
                    base = matmul(&base, &base);
                }
            }
            self.last = Some((k, acc));
        }
        &self.last.as_ref().expect("power cached above").1
    }
}

impl Trajectory {
    /// `heisenberg`: `U(t)^dagger A U(t)`; otherwise `U(t) A U(t)^dagger`.
    fn new(system: &SpinSystem, dynamics: &Dynamics, op: &OperatorMatrix, heisenberg: bool) -> Result<Self> {
        match dynamics {
            Dynamics::Ideal { hamiltonian } => {
                let propagator = Propagator::new(&hamiltonian.build(system)?)?;
                Ok(Trajectory::Spectral {
                    op: propagator.to_eigenbasis(op),
                    propagator,
                    sign: if heisenberg { 1.0 } else { -1.0 },
                })
            }
            Dynamics::Pulsed { sequence } => {
                let mut builder = CycleBuilder::new(system, sequence.resonance_offset)?;
                Ok(Trajectory::Stroboscopic {
                    powers: CyclePowers::new(builder.cycle(sequence)?),
                    cycle_time: sequence.cycle_time,
                    state: op.matrix().clone(),
                    step: 0,
                    heisenberg,
                })
            }
        }
    }

    fn at(&mut self, t: f64) -> Result<DMatrix<C64>> {
        match self {
            Trajectory::Spectral { propagator, op, sign } => Ok(propagator.evolve_from_eigenbasis(op, *sign * t)),
            Trajectory::Stroboscopic { powers, cycle_time, state, step, heisenberg } => {
                let target = cycle_count(t, *cycle_time)?;
                if target < *step {
                    return Err(SpinError::InvalidArgument("pulsed time grid must be non-decreasing".into()));
                }
                if target > *step {
                    let u = powers.get(target - *step);
                    *state = if *heisenberg { conjugate_adjoint(u, state) } else { conjugate(u, state) };
                    *step = target;
                }
                Ok(state.clone())
            }
        }
    }
}

/// Number of whole cycles in `t`, or a stroboscopic-grid error.
pub fn cycle_count(t: f64, cycle_time: f64) -> Result<u64> {
    let k = t / cycle_time;
    let r = k.round();
    if r < 0.0 || (k - r).abs() > 1e-6 {
        return Err(SpinError::NotStroboscopic { time: t, cycle: cycle_time });
    }
    Ok(r as u64)
}

/// `m * t_c` for `m = 0..count`.
pub fn stroboscopic_times(cycle_time: f64, count: usize, stride: usize) -> Vec<f64> {
    (0..count).map(|m| (m * stride) as f64 * cycle_time).collect()
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(SpinError::InvalidArgument("times must be finite and non-negative".into()));
    }
    Ok(())
}

/// `P(t) = Tr[I^z(t) I^z] / Tr[(I^z)^2]`.
pub fn magnetization_decay(system: &SpinSystem, dynamics: &Dynamics, times: &[f64]) -> Result<SignalCurve> {
    check_times(times)?;
    let iz = collective_operator(system, Axis::Z);
    let meta = dynamics.meta(system.n_spins(), "decay");
    let values = match dynamics {
        Dynamics::Ideal { hamiltonian } => {
            Propagator::new(&hamiltonian.build(system)?)?.correlation_series(&iz, &iz, times)
        }
        Dynamics::Pulsed { .. } => {
            let mut traj = Trajectory::new(system, dynamics, &iz, true)?;
            let norm = correlator_norm(system.n_spins());
            let mut out = Vec::with_capacity(times.len());
            for &t in times {
                out.push(trace_product(&traj.at(t)?, iz.matrix()).re / norm);
            }
            out
        }
    };
    Ok(SignalCurve::new(times.to_vec(), values, meta))
}

/// Visit `(A(t), B(t))` with `A = U_F I^z U_F^dagger` and `B = U_B^dagger I^z U_B`.
pub(crate) fn echo_pairs(
    system: &SpinSystem,
    forward: &Dynamics,
    backward: &Dynamics,
    times: &[f64],
    mut visit: impl FnMut(usize, &DMatrix<C64>, &DMatrix<C64>) -> Result<()>,
) -> Result<()> {
    check_times(times)?;
    let iz = collective_operator(system, Axis::Z);
    let mut fwd = Trajectory::new(system, forward, &iz, false)?;
    let mut bwd = Trajectory::new(system, backward, &iz, true)?;
    for (i, &t) in times.iter().enumerate() {
        let a = fwd.at(t)?;
        let b = bwd.at(t)?;
        visit(i, &a, &b)?;
    }
    Ok(())
}

/// `M(t) = Tr[U_B U_F I^z U_F^dagger U_B^dagger I^z] / Tr[(I^z)^2]`: forward
/// block for `t`, then backward block for `t`.
pub fn loschmidt_echo(system: &SpinSystem, forward: &Dynamics, backward: &Dynamics, times: &[f64]) -> Result<SignalCurve> {
    if (forward.scaling() - backward.scaling()).abs() > 1e-12 {
        return Err(SpinError::InvalidArgument(format!(
            "echo needs matched scaling, got {} and {}",
            forward.scaling(),
            backward.scaling()
        )));
    }
    let norm = correlator_norm(system.n_spins());
    let mut values = vec![0.0; times.len()];
    echo_pairs(system, forward, backward, times, |i, a, b| {
        values[i] = trace_product(a, b).re / norm;
        Ok(())
    })?;
    let mut meta = forward.meta(system.n_spins(), "echo");
    meta.delta = forward.scaling();
    Ok(SignalCurve::new(times.to_vec(), values, meta))
}

/// `M^delta(t) / M^0(t)` on a shared time grid.
pub fn normalized_echo(echo: &SignalCurve, reference: &SignalCurve) -> Result<SignalCurve> {
    if echo.times.len() != reference.times.len()
        || echo.times.iter().zip(&reference.times).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1e-12))
    {
        return Err(SpinError::InvalidArgument("normalized echo needs identical time grids".into()));
    }
    let values = echo.values.iter().zip(&reference.values).map(|(m, r)| m / r).collect();
    let mut meta = echo.meta.clone();
    meta.label = format!("{}_normalized", echo.meta.label);
    Ok(SignalCurve { times: echo.times.clone(), self_times: echo.self_times.clone(), values, meta })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    /// Shared self-time grid, seconds.
    pub grid: Vec<f64>,
    /// `max - min` across curves at each grid point.
    pub spread: Vec<f64>,
    pub max_spread: f64,
    pub mean_spread: f64,
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v < x);
    if k == 0 {
        return ys[0];
    }
    if k >= xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    if x1 == x0 {
        return ys[k];
    }
    ys[k - 1] + (ys[k] - ys[k - 1]) * (x - x0) / (x1 - x0)
}

/// Interpolate every curve onto `points` evenly spaced self-times spanning
/// the common range, optionally clipped to `upto`, and report the spread.
pub fn self_time_collapse(curves: &[SignalCurve], points: usize, upto: Option<f64>) -> Result<CollapseReport> {
    if curves.len() < 2 {
        return Err(SpinError::InvalidArgument("collapse needs at least two curves".into()));
    }
    if points < 2 {
        return Err(SpinError::InvalidArgument("collapse grid needs at least two points".into()));
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for c in curves {
        if c.is_empty() {
            return Err(SpinError::NoOverlap);
        }
        if c.self_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(SpinError::InvalidArgument("self-times must be sorted".into()));
        }
        lo = lo.max(c.self_times[0]);
        hi = hi.min(c.self_times[c.len() - 1]);
    }
    if let Some(u) = upto {
        hi = hi.min(u);
    }
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(SpinError::NoOverlap);
    }
    let grid: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let spread: Vec<f64> = grid
        .iter()
        .map(|&x| {
            let vals = curves.iter().map(|c| interpolate(&c.self_times, &c.values, x));
            let (mn, mx) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            mx - mn
        })
        .collect();
    let max_spread = spread.iter().copied().fold(0.0, f64::max);
    let mean_spread = spread.iter().sum::<f64>() / spread.len() as f64;
    Ok(CollapseReport { grid, spread, max_spread, mean_spread })
}
