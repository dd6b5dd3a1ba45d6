// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Exact cycle propagators and numeric toggling-frame averages.

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::{Element, PulseSequence};
use crate::error::{Result, SpinError};
use crate::hamiltonians::internal;
use crate::spin::linalg::{conjugate_adjoint, matmul};
use crate::spin::{collective_for, global_rotation, Axis, OperatorMatrix, Propagator, SpinSystem, C64};

/// Internal Hamiltonian seen between and during pulses, including a uniform
/// resonance offset.
fn internal_with_offset(system: &SpinSystem, offset: f64) -> Result<OperatorMatrix> {
    let h = internal(system)?;
    if offset == 0.0 {
        return Ok(h);
    }
    h.add(&collective_for(system.n_spins(), Axis::Z)?.scaled(-offset))
}

fn drive(n_spins: usize, phase: f64, amplitude: f64) -> Result<OperatorMatrix> {
    let x = collective_for(n_spins, Axis::X)?.scaled(amplitude * phase.cos());
    let y = collective_for(n_spins, Axis::Y)?.scaled(amplitude * phase.sin());
    x.add(&y)
}

/// Builds cycle unitaries for one system, caching every element unitary.
/// Reusable across sequences that share the same resonance offset.
pub struct CycleBuilder {
    n_spins: usize,
    offset: f64,
    h_int: OperatorMatrix,
    free: Propagator,
    cache: HashMap<[u64; 4], DMatrix<C64>>,
}

impl CycleBuilder {
    pub fn new(system: &SpinSystem, resonance_offset: f64) -> Result<Self> {
        let h_int = internal_with_offset(system, resonance_offset)?;
        let free = Propagator::new(&h_int)?;
        Ok(Self { n_spins: system.n_spins(), offset: resonance_offset, h_int, free, cache: HashMap::new() })
    }

    pub fn resonance_offset(&self) -> f64 {
        self.offset
    }

    fn element(&mut self, el: &Element) -> Result<DMatrix<C64>> {
        // kind tag, then bit patterns of the defining reals
        let key = match el {
            Element::Delay(d) => [0, d.to_bits(), 0, 0],
            Element::Pulse(p) => [1, p.phase_angle().to_bits(), p.flip_angle.to_bits(), p.duration.to_bits()],
            Element::SpinLock(l) => [2, (l.phase.angle() + l.phase_offset).to_bits(), l.amplitude.to_bits(), l.duration.to_bits()],
        };
        if let Some(u) = self.cache.get(&key) {
            return Ok(u.clone());
        }
        let u = match el {
            Element::Delay(d) => self.free.unitary(*d),
            Element::Pulse(p) if p.duration == 0.0 => {
                let phi = p.phase_angle();
                global_rotation(self.n_spins, [phi.cos(), phi.sin(), 0.0], p.flip_angle)?
            }
            Element::Pulse(p) => {
                let amp = p.flip_angle / p.duration;
                let h = self.h_int.add(&drive(self.n_spins, p.phase_angle(), amp)?)?;
                Propagator::new(&h)?.unitary(p.duration)
            }
            Element::SpinLock(l) => {
                let h = self.h_int.add(&drive(self.n_spins, l.phase.angle() + l.phase_offset, l.amplitude)?)?;
                Propagator::new(&h)?.unitary(l.duration)
            }
        };
        self.cache.insert(key, u.clone());
        Ok(u)
    }

    /// Time-ordered product over one cycle.
    pub fn cycle(&mut self, seq: &PulseSequence) -> Result<DMatrix<C64>> {
        if (seq.resonance_offset - self.offset).abs() > 0.0 {
            return Err(SpinError::InvalidArgument(format!(
                "builder offset {} differs from sequence offset {}",
                self.offset, seq.resonance_offset
            )));
        }
        let dim = 1usize << self.n_spins;
        let mut u = DMatrix::<C64>::identity(dim, dim);
        for el in seq.elements() {
            if matches!(el, Element::Delay(d) if *d == 0.0) {
                continue;
            }
            let e = self.element(el)?;
            u = matmul(&e, &u);
        }
        Ok(u)
    }
}

/// Exact one-cycle propagator of `seq` acting on `system`.
pub fn cycle_propagator(seq: &PulseSequence, system: &SpinSystem) -> Result<OperatorMatrix> {
    let mut builder = CycleBuilder::new(system, seq.resonance_offset)?;
    Ok(OperatorMatrix::from_parts(system.n_spins(), builder.cycle(seq)?, false))
}

/// Zeroth or first Magnus term of an ideal-pulse sequence, from the
/// piecewise-constant toggled Hamiltonians.
pub fn numeric_average_hamiltonian(seq: &PulseSequence, system: &SpinSystem, order: usize) -> Result<OperatorMatrix> {
    if order > 1 {
        return Err(SpinError::InvalidArgument(format!("Magnus order {order} not available, use 0 or 1")));
    }
    let n = system.n_spins();
    let h = internal_with_offset(system, seq.resonance_offset)?;
    let dim = system.dim();
    let mut frame = DMatrix::<C64>::identity(dim, dim);
    let mut toggled: Vec<(f64, DMatrix<C64>)> = Vec::new();
    for el in seq.elements() {
        match el {
            Element::Delay(d) => toggled.push((*d, conjugate_adjoint(&frame, h.matrix()))),
            Element::Pulse(p) if p.duration > 0.0 => return Err(SpinError::FiniteWidthPulses),
            Element::Pulse(p) => {
                let phi = p.phase_angle();
                let r = global_rotation(n, [phi.cos(), phi.sin(), 0.0], p.flip_angle)?;
                frame = matmul(&r, &frame);
            }
            Element::SpinLock(_) => {
                return Err(SpinError::InvalidArgument(
                    "continuous drive: toggled Hamiltonian is not piecewise constant".into(),
                ))
            }
        }
    }
    let tc: f64 = toggled.iter().map(|t| t.0).sum();
    if tc <= 0.0 {
        return Err(SpinError::InvalidArgument("sequence has zero duration".into()));
    }
    let out = if order == 0 {
        let mut acc = DMatrix::<C64>::zeros(dim, dim);
        for (d, ht) in &toggled {
            acc += ht * C64::new(*d / tc, 0.0);
        }
        acc
    } else {
        // sum_l Delta_l [H_l, S_l] with S_l = sum_{k<l} Delta_k H_k
        let mut running = DMatrix::<C64>::zeros(dim, dim);
        let mut acc = DMatrix::<C64>::zeros(dim, dim);
        for (d, ht) in &toggled {
            let comm = matmul(ht, &running) - matmul(&running, ht);
            acc += comm * C64::new(*d, 0.0);
            running += ht * C64::new(*d, 0.0);
        }
        acc * C64::new(0.0, -1.0 / (2.0 * tc))
    };
    let sym = (&out + out.adjoint()) * C64::new(0.5, 0.0);
    Ok(OperatorMatrix::from_parts(n, sym, true))
}
