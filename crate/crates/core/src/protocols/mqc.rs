// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Multiple-quantum coherence spectra and the out-of-time-order commutator.
//!
//! The encoding rotation `Phi = exp(-i phi I^z)` multiplies `A_rs` by
//! `exp(-i phi (m_r - m_s))`, so `S_phi` is a short Fourier sum over the
//! coherence order `m_r - m_s`. Pair products are binned by order once per
//! time point and every phase is evaluated from the bins.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{echo_pairs, Dynamics, Trajectory};
use crate::error::{Result, SpinError};
use crate::spin::basis::twice_total_m;
use crate::spin::{collective_operator, correlator_norm, Axis, SpinSystem, C64};

/// Intensity above which an order at or beyond `Q/2` counts as aliased.
pub const ALIAS_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MQCSpectrum {
    /// Seconds.
    pub t: f64,
    pub q_steps: usize,
    /// `S_phi` at `phi_n = 2 pi n / Q`, `n = 0..Q`.
    pub s_phi: Vec<f64>,
    /// Coherence orders `-Q/2 ..= Q/2 - 1`.
    pub orders: Vec<i64>,
    pub s_q: Vec<f64>,
    pub second_moment: f64,
}

impl MQCSpectrum {
    pub fn intensity(&self, q: i64) -> Option<f64> {
        self.orders.iter().position(|&o| o == q).map(|i| self.s_q[i])
    }

    /// `sum_q S_q`, equal to the echo amplitude `S_phi(0)`.
    pub fn total(&self) -> f64 {
        self.s_q.iter().sum()
    }
}

/// Order-binned `sum A_rs B_sr / Tr[(I^z)^2]`, indexed by `order + n_spins`.
fn order_bins(n_spins: usize, a: &DMatrix<C64>, b: &DMatrix<C64>) -> Vec<C64> {
    let dim = a.nrows();
    let m2: Vec<i64> = (0..dim).map(|s| twice_total_m(s, n_spins)).collect();
    let mut bins = vec![C64::new(0.0, 0.0); 2 * n_spins + 1];
    for s in 0..dim {
        for r in 0..dim {
            let order = (m2[r] - m2[s]) / 2;
            bins[(order + n_spins as i64) as usize] += a[(r, s)] * b[(s, r)];
        }
    }
    let norm = correlator_norm(n_spins);
    bins.iter_mut().for_each(|v| *v /= norm);
    bins
}

fn spectrum_from_bins(n_spins: usize, t: f64, q_steps: usize, bins: &[C64]) -> Result<MQCSpectrum> {
    let half = (q_steps / 2) as i64;
    let aliased = bins
        .iter()
        .enumerate()
        .map(|(i, v)| (i as i64 - n_spins as i64, v.norm()))
        .filter(|(order, v)| order.abs() >= half && *v > ALIAS_GUARD)
        .map(|(order, _)| order.unsigned_abs() as usize)
        .max();
    if let Some(max_order) = aliased {
        return Err(SpinError::Aliasing { q_steps, max_order });
    }
    let phis: Vec<f64> = (0..q_steps).map(|n| 2.0 * PI * n as f64 / q_steps as f64).collect();
    let s_phi: Vec<f64> = phis
        .iter()
        .map(|&phi| {
            bins.iter()
                .enumerate()
                .map(|(i, v)| (v * C64::from_polar(1.0, -phi * (i as f64 - n_spins as f64))).re)
                .sum()
        })
        .collect();
    let orders: Vec<i64> = (-half..half).collect();
    let s_q: Vec<f64> = orders
        .iter()
        .map(|&q| {
            let acc: C64 = phis.iter().zip(&s_phi).map(|(&phi, &s)| C64::from_polar(s, q as f64 * phi)).sum();
            acc.re / q_steps as f64
        })
        .collect();
    let second_moment = orders.iter().zip(&s_q).map(|(&q, &s)| (q * q) as f64 * s).sum();
    Ok(MQCSpectrum { t, q_steps, s_phi, orders, s_q, second_moment })
}

fn check_q(q_steps: usize) -> Result<()> {
    if q_steps < 2 || q_steps % 2 == 1 {
        return Err(SpinError::InvalidArgument(format!("phase steps Q must be even and at least 2, got {q_steps}")));
    }
    Ok(())
}

/// MQC spectra of the echo `forward(t)`, encoding rotation, `backward(t)`.
pub fn mqc_series(
    system: &SpinSystem,
    forward: &Dynamics,
    backward: &Dynamics,
    times: &[f64],
    q_steps: usize,
) -> Result<Vec<MQCSpectrum>> {
    check_q(q_steps)?;
    let n = system.n_spins();
    let mut out = Vec::with_capacity(times.len());
    echo_pairs(system, forward, backward, times, |i, a, b| {
        out.push(spectrum_from_bins(n, times[i], q_steps, &order_bins(n, a, b))?);
        Ok(())
    })?;
    Ok(out)
}

pub fn mqc_spectrum(system: &SpinSystem, forward: &Dynamics, backward: &Dynamics, t: f64, q_steps: usize) -> Result<MQCSpectrum> {
    Ok(mqc_series(system, forward, backward, &[t], q_steps)?.remove(0))
}

/// `sum_q q^2 S_q`.
pub fn otoc_second_moment(spectrum: &MQCSpectrum) -> f64 {
    spectrum.orders.iter().zip(&spectrum.s_q).map(|(&q, &s)| (q * q) as f64 * s).sum()
}

/// `Tr[[I^z, I^z(t)]^dagger [I^z, I^z(t)]] / Tr[(I^z)^2]`, from explicit
/// matrix commutators.
pub fn direct_oto_commutator(system: &SpinSystem, dynamics: &Dynamics, t: f64) -> Result<f64> {
    let iz = collective_operator(system, Axis::Z);
    let mut traj = Trajectory::new(system, dynamics, &iz, true)?;
    let izt = traj.at(t)?;
    let c = iz.matrix() * &izt - &izt * iz.matrix();
    Ok(c.iter().map(|v| v.norm_sqr()).sum::<f64>() / correlator_norm(system.n_spins()))
}
