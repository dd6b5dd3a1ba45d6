// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Toggling frames of ideal pulses as signed axis permutations, and the
//! exact average Hamiltonian they imply.
//!
//! A frame `M` maps a lab-frame spin vector to its toggling-frame image:
//! after pulses `P_1..P_k` we have `R^dagger (v . I) R = (M v) . I` with
//! `R = P_k ... P_1`. Because `H_d^x + H_d^y + H_d^z = 0`, a dwell of weight
//! `w_a` on each axis averages to `(w_y - w_x) H_d^y + (w_z - w_x) H_d^z`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{Element, PulseSequence};
use crate::error::{Result, SpinError};
use crate::spin::Axis;

/// Element of the signed-permutation group acting on `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameRotation {
    m: [[i8; 3]; 3],
}

impl FrameRotation {
    pub const IDENTITY: FrameRotation = FrameRotation { m: [[1, 0, 0], [0, 1, 0], [0, 0, 1]] };

    /// Frame map of `exp(-i angle n.I)` for `n` in the transverse plane at
    /// `phase` (0 = +x, pi/2 = +y). Defined only when both angles are
    /// multiples of pi/2.
    pub fn of_pulse(phase: f64, angle: f64) -> Result<Self> {
        let quarters = quarter_turns(angle).ok_or(SpinError::SymbolicFrameUndefined(angle))?;
        let phase_q = quarter_turns(phase).ok_or(SpinError::SymbolicFrameUndefined(phase))?;
        // Conjugation by exp(-i a n.I) rotates operators by -a about n.
        let (axis, sign) = match phase_q.rem_euclid(4) {
            0 => (0, 1),
            1 => (1, 1),
            2 => (0, -1),
            _ => (1, -1),
        };
        let quarter = Self::quarter_about(axis, -sign);
        let mut out = Self::IDENTITY;
        for _ in 0..quarters.rem_euclid(4) {
            out = out.then(quarter);
        }
        Ok(out)
    }

    /// Rotation by `sign * pi/2` about lab axis `axis`.
    fn quarter_about(axis: usize, sign: i8) -> Self {
        let mut m = [[0i8; 3]; 3];
        let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
        m[axis][axis] = 1;
        // e_b -> sign e_c, e_c -> -sign e_b
        m[c][b] = sign;
        m[b][c] = -sign;
        Self { m }
    }

    /// Composition `self * next` (apply `next` first).
    pub fn then(self, next: FrameRotation) -> FrameRotation {
        let mut m = [[0i8; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = (0..3).map(|k| self.m[i][k] * next.m[k][j]).sum();
            }
        }
        FrameRotation { m }
    }

    pub fn apply(self, v: [i8; 3]) -> [i8; 3] {
        let mut out = [0i8; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..3).map(|k| self.m[i][k] * v[k]).sum();
        }
        out
    }

    /// Signed lab axis carrying the toggled `I^z`.
    pub fn toggled_z(self) -> (Axis, i8) {
        let v = self.apply([0, 0, 1]);
        let idx = v.iter().position(|&c| c != 0).expect("orthogonal frame");
        (Axis::from_index(idx), v[idx])
    }

    pub fn matrix(self) -> [[i8; 3]; 3] {
        self.m
    }

    pub fn is_identity(self) -> bool {
        self == Self::IDENTITY
    }

    pub fn is_orthogonal(self) -> bool {
        let t = FrameRotation { m: [0, 1, 2].map(|i| [0, 1, 2].map(|j| self.m[j][i])) };
        self.then(t).is_identity()
    }
}

fn quarter_turns(angle: f64) -> Option<i64> {
    let q = angle / FRAC_PI_2;
    let r = q.round();
    ((q - r).abs() < 1e-9).then_some(r as i64)
}

/// Exact zeroth-order average and bookkeeping for ideal pulse sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicAverage {
    /// Dwell fractions `(w_x, w_y, w_z)` of the toggled dipolar axis.
    pub weights: [f64; 3],
    /// `H^0 = c_y H_d^y + c_z H_d^z`.
    pub c_y: f64,
    pub c_z: f64,
    /// Average Zeeman direction: `H^0_Z = -sum_i omega_i (zeeman . I_i)`.
    pub zeeman: [f64; 3],
    /// First-order dipolar term: `H^1 = first_order * (-i) [H_d^y, H_d^z]`.
    /// `None` when a continuous drive makes the toggling frame non-piecewise.
    pub first_order: Option<f64>,
    /// Whether the pulses multiply to the identity frame.
    pub closes: bool,
    pub cycle_time: f64,
}

/// Antisymmetric structure of `[H^a, H^b] = eps(a, b) [H^y, H^z]`.
pub(crate) fn commutator_sign(a: Axis, b: Axis) -> f64 {
    use Axis::*;
    match (a, b) {
        (Y, Z) | (Z, X) | (X, Y) => 1.0,
        (Z, Y) | (X, Z) | (Y, X) => -1.0,
        _ => 0.0,
    }
}

/// `(duration, toggled z axis, sign)`.
pub(crate) type Interval = (f64, Axis, i8);

/// Piecewise intervals of an ideal sequence, plus the closing frame.
pub(crate) fn intervals(seq: &PulseSequence) -> Result<(Vec<Interval>, FrameRotation)> {
    let mut frame = FrameRotation::IDENTITY;
    let mut out = Vec::new();
    for el in seq.elements() {
        match el {
            Element::Delay(d) => {
                let (axis, sign) = frame.toggled_z();
                out.push((*d, axis, sign));
            }
            Element::Pulse(p) => {
                if p.duration > 0.0 {
                    return Err(SpinError::FiniteWidthPulses);
                }
                frame = frame.then(FrameRotation::of_pulse(p.phase_angle(), p.flip_angle)?);
            }
            Element::SpinLock(lock) => {
                // A continuous drive rotating through whole turns spends
                // equal time on the two axes orthogonal to the drive.
                let turns = lock.amplitude * lock.duration / (4.0 * FRAC_PI_2);
                if (turns - turns.round()).abs() > 1e-9 || turns.round() == 0.0 {
                    return Err(SpinError::SymbolicFrameUndefined(lock.amplitude * lock.duration));
                }
                let drive = FrameRotation::of_pulse(lock.phase.angle(), FRAC_PI_2)?;
                let (axis, sign) = frame.toggled_z();
                let (axis2, _) = frame.then(drive).toggled_z();
                // Parallel to the drive: locked, the sign survives.
                let sign = if axis2 == axis { sign } else { 0 };
                out.push((lock.duration / 2.0, axis, sign));
                out.push((lock.duration / 2.0, axis2, sign));
            }
        }
    }
    Ok((out, frame))
}

/// Exact toggling-frame average of an ideal sequence.
pub fn symbolic_average(seq: &PulseSequence) -> Result<SymbolicAverage> {
    let (ints, frame) = intervals(seq)?;
    let continuous = seq.elements().iter().any(|e| matches!(e, Element::SpinLock(_)));
    let total: f64 = ints.iter().map(|i| i.0).sum();
    if total <= 0.0 {
        return Err(SpinError::InvalidArgument("sequence has zero duration".into()));
    }
    let mut weights = [0.0; 3];
    let mut zeeman = [0.0; 3];
    for &(d, axis, sign) in &ints {
        weights[axis.index()] += d / total;
        zeeman[axis.index()] += sign as f64 * d / total;
    }
    let mut first = 0.0;
    for (l, &(dl, al, _)) in ints.iter().enumerate() {
        for &(dk, ak, _) in &ints[..l] {
            first += dk * dl * commutator_sign(al, ak);
        }
    }
    Ok(SymbolicAverage {
        weights,
        c_y: weights[1] - weights[0],
        c_z: weights[2] - weights[0],
        zeeman,
        first_order: (!continuous).then_some(first / (2.0 * total)),
        closes: frame.is_identity(),
        cycle_time: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn x_pulse_sends_z_to_y() {
        let f = FrameRotation::of_pulse(0.0, FRAC_PI_2).unwrap();
        assert_eq!(f.toggled_z(), (Axis::Y, 1));
        let fy = FrameRotation::of_pulse(FRAC_PI_2, FRAC_PI_2).unwrap();
        assert_eq!(fy.toggled_z(), (Axis::X, -1));
    }

    #[test]
    fn opposite_phases_cancel_and_four_quarters_close() {
        let x = FrameRotation::of_pulse(0.0, FRAC_PI_2).unwrap();
        let mx = FrameRotation::of_pulse(PI, FRAC_PI_2).unwrap();
        assert!(x.then(mx).is_identity());
        assert!(x.then(x).then(x).then(x).is_identity());
        assert!(!x.then(x).is_identity());
        assert!(x.is_orthogonal());
    }

    #[test]
    fn group_closure_has_24_elements() {
        let gens: Vec<_> = [0.0, FRAC_PI_2].iter().map(|&p| FrameRotation::of_pulse(p, FRAC_PI_2).unwrap()).collect();
        let mut seen = vec![FrameRotation::IDENTITY];
        let mut i = 0;
        while i < seen.len() {
            for g in &gens {
                let n = seen[i].then(*g);
                if !seen.contains(&n) {
                    seen.push(n);
                }
            }
            i += 1;
        }
        assert_eq!(seen.len(), 24);
        assert!(seen.iter().all(|f| f.is_orthogonal()));
    }

    #[test]
    fn non_quarter_angle_rejected() {
        assert!(matches!(FrameRotation::of_pulse(0.0, 1.0), Err(SpinError::SymbolicFrameUndefined(_))));
    }
}
