// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Exhaustive search over the `4^8` phase patterns of the 8-pulse cycle.
//!
//! Delays are affine in `delta` with integer coefficients, so every
//! condition is checked exactly on integer polynomials in `delta`.

use serde::{Deserialize, Serialize};

use super::frame::{commutator_sign, FrameRotation};
use super::{delay_pattern_8p, Direction, Phase};
use crate::error::Result;
use crate::spin::Axis;
use std::f64::consts::FRAC_PI_2;

pub type PhasePattern = [Phase; 8];

/// `tau * (constant + slope * delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AffineDelay {
    pub constant: i64,
    pub slope: i64,
}

impl AffineDelay {
    pub fn evaluate(self, tau: f64, delta: f64) -> f64 {
        tau * (self.constant as f64 + self.slope as f64 * delta)
    }
}

/// Wanted `(c_y, c_z)` as affine functions of `delta`: `c = constant + slope * delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineTarget {
    pub c_y: (i64, i64),
    pub c_z: (i64, i64),
}

impl AffineTarget {
    pub fn for_direction(direction: Direction) -> Self {
        let s = if direction == Direction::Backward { -1 } else { 1 };
        AffineTarget { c_y: (0, s), c_z: (0, 0) }
    }
}

/// Polynomial in `delta`, lowest order first.
type Poly = [i64; 3];

fn add(a: &mut Poly, b: Poly, scale: i64) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += scale * y;
    }
}

fn affine(d: AffineDelay) -> Poly {
    [d.constant, d.slope, 0]
}

fn product(a: AffineDelay, b: AffineDelay) -> Poly {
    [a.constant * b.constant, a.constant * b.slope + a.slope * b.constant, a.slope * b.slope]
}

/// Toggled `(axis, sign)` for each of the nine delay slots, and the closing frame.
fn slot_frames(phases: &[Phase]) -> (Vec<(Axis, i8)>, FrameRotation) {
    let mut frame = FrameRotation::IDENTITY;
    let mut out = vec![frame.toggled_z()];
    for p in phases {
        frame = frame.then(FrameRotation::of_pulse(p.angle(), FRAC_PI_2).expect("quarter pulse"));
        out.push(frame.toggled_z());
    }
    (out, frame)
}

fn satisfies(phases: &[Phase], delays: &[AffineDelay], target: AffineTarget) -> bool {
    let (slots, frame) = slot_frames(phases);
    if !frame.is_identity() {
        return false;
    }
    let mut weight = [[0i64; 3]; 3];
    let mut zeeman = [[0i64; 3]; 3];
    let mut total: Poly = [0; 3];
    for (&(axis, sign), &d) in slots.iter().zip(delays) {
        add(&mut weight[axis.index()], affine(d), 1);
        add(&mut zeeman[axis.index()], affine(d), sign as i64);
        add(&mut total, affine(d), 1);
    }
    // (w_y - w_x) == c_y * total and (w_z - w_x) == c_z * total, as polynomials
    let check = |axis: usize, c: (i64, i64)| {
        let mut lhs = weight[axis];
        add(&mut lhs, weight[0], -1);
        let mut rhs = [0i64; 3];
        add(&mut rhs, [total[0] * c.0, total[0] * c.1 + total[1] * c.0, total[1] * c.1], 1);
        lhs == rhs
    };
    check(1, target.c_y) && check(2, target.c_z) && zeeman.iter().all(|z| *z == [0; 3])
}

/// Every pattern (in lexicographic order of `+x < -x < +y < -y`) that closes,
/// refocuses Zeeman terms and reaches `target` for all `delta`.
pub fn search_phase_patterns(delays: &[AffineDelay], target: AffineTarget) -> Vec<PhasePattern> {
    assert_eq!(delays.len(), 9, "8-pulse cycle has nine delay slots");
    (0..1usize << 16)
        .map(pattern_from_index)
        .filter(|p| satisfies(p, delays, target))
        .collect()
}

pub(crate) fn pattern_from_index(index: usize) -> PhasePattern {
    let mut out = [Phase::X; 8];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = Phase::ALL[(index >> (2 * (7 - k))) & 3];
    }
    out
}

/// Sum over `k < l` of `Delta_k Delta_l eps(a_l, a_k)` as a polynomial in
/// `delta` (units of `tau^2`); `H^1` is this over `2 t_c` times `-i[H^y, H^z]`.
pub(crate) fn first_order_poly(phases: &[Phase], delays: &[AffineDelay]) -> Poly {
    let (slots, _) = slot_frames(phases);
    let mut acc = [0i64; 3];
    for l in 0..slots.len() {
        for k in 0..l {
            let eps = commutator_sign(slots[l].0, slots[k].0) as i64;
            if eps != 0 {
                add(&mut acc, product(delays[k], delays[l]), eps);
            }
        }
    }
    acc
}

/// Signed-axis cross products `sum_{k<l} Delta_k Delta_l s_k s_l (e_l x e_k)`:
/// the first-order term of a uniform offset, per lab axis.
pub(crate) fn offset_first_order_poly(phases: &[Phase], delays: &[AffineDelay]) -> [Poly; 3] {
    let (slots, _) = slot_frames(phases);
    let mut acc = [[0i64; 3]; 3];
    for l in 0..slots.len() {
        for k in 0..l {
            let (al, sl) = slots[l];
            let (ak, sk) = slots[k];
            let eps = commutator_sign(al, ak) as i64;
            if eps != 0 {
                // e_al x e_ak lies along the third axis with sign eps
                let c = 3 - al.index() - ak.index();
                add(&mut acc[c], product(delays[k], delays[l]), eps * (sl * sk) as i64);
            }
        }
    }
    acc
}

/// Phases and merged delay slots of the 16-pulse cycle built from an
/// 8-pulse one: the pi-shifted copy follows, its first delay joining the
/// last delay of the original.
pub(crate) fn sixteen_pulse(phases: &[Phase], delays: &[AffineDelay]) -> (Vec<Phase>, Vec<AffineDelay>) {
    let mut ph = phases.to_vec();
    ph.extend(phases.iter().map(|p| p.shifted_by_pi()));
    let n = delays.len() - 1;
    let mut dl = delays[..n].to_vec();
    dl.push(AffineDelay { constant: delays[n].constant + delays[0].constant, slope: delays[n].slope + delays[0].slope });
    dl.extend_from_slice(&delays[1..]);
    (ph, dl)
}

/// 8-pulse patterns valid in both directions whose 16-pulse extension has
/// vanishing dipolar and offset first-order terms for every `delta`.
/// Lexicographic order.
pub fn first_order_symmetric_hits() -> Result<Vec<PhasePattern>> {
    let fwd = delay_pattern_8p(Direction::Forward)?;
    let bwd = delay_pattern_8p(Direction::Backward)?;
    let f_hits = search_phase_patterns(&fwd, AffineTarget::for_direction(Direction::Forward));
    let b_target = AffineTarget::for_direction(Direction::Backward);
    Ok(f_hits
        .into_iter()
        .filter(|p| satisfies(p, &bwd, b_target))
        .filter(|p| {
            [&fwd, &bwd].iter().all(|d| {
                let (ph, dl) = sixteen_pulse(p, d);
                first_order_poly(&ph, &dl) == [0; 3] && offset_first_order_poly(&ph, &dl).iter().all(|c| *c == [0; 3])
            })
        })
        .collect())
}
