// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;
use spinscale_core::hamiltonians::{dipolar_secular, HamiltonianSpec};
use spinscale_core::protocols::*;
use spinscale_core::sequence::*;
use spinscale_core::spin::*;

fn cluster(n: usize, seed: u64, dbar: f64) -> SpinSystem {
    SpinSystem::random_cluster(n, 1.0, CouplingRule::DipolarAngular, seed).unwrap().normalized_to(dbar).unwrap()
}

fn pair(d: f64) -> SpinSystem {
    SpinSystem::from_couplings(DMatrix::from_row_slice(2, 2, &[0.0, d, d, 0.0])).unwrap()
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// `Tr[I^z(t) I^z] / Tr[(I^z)^2]` for a pair under `delta H_d^y`, from
/// explicit Kronecker products of spin-1/2 matrices.
fn pair_oracle(d: f64, delta: f64, t: f64) -> f64 {
    let c = |re: f64, im: f64| C64::new(re, im);
    let sx = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
    let sy = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.0, 0.0)]);
    let sz = DMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
    let id = DMatrix::<C64>::identity(2, 2);
    let h = (kron(&sy, &sy) * c(2.0, 0.0) - kron(&sx, &sx) - kron(&sz, &sz)) * c(d * delta, 0.0);
    let iz = kron(&sz, &id) + kron(&id, &sz);
    let u = (h * c(0.0, -t)).exp();
    let izt = u.adjoint() * &iz * &u;
    (izt * &iz).trace().re / (&iz * &iz).trace().re
}

#[test]
fn two_spin_decay_and_mqc_support() {
    let (d, delta) = (2.0, 0.35);
    let s = pair(d);
    let times: Vec<f64> = (0..40).map(|k| 0.1 * k as f64).collect();
    let curve = magnetization_decay(&s, &Dynamics::scaled(delta), &times).unwrap();
    for (&t, &v) in times.iter().zip(&curve.values) {
        assert!((v - (1.5 * delta * d * t).cos()).abs() < 1e-10);
        assert!((v - pair_oracle(d, delta, t)).abs() < 1e-10, "t={t}");
    }
    for &t in &[0.3, 1.1, 2.9] {
        let sp = mqc_spectrum(&s, &Dynamics::scaled(delta), &Dynamics::scaled(-delta), t, 8).unwrap();
        for (&q, &v) in sp.orders.iter().zip(&sp.s_q) {
            if ![0, 2, -2].contains(&q) {
                assert!(v.abs() < 1e-10, "q={q}: {v:e}");
            }
        }
        assert!(sp.intensity(2).unwrap() > 1e-3);
    }
}

#[test]
fn forward_and_backward_decays_coincide() {
    let s = cluster(6, 4, 1.0);
    let times: Vec<f64> = (0..30).map(|k| 0.2 * k as f64).collect();
    let f = magnetization_decay(&s, &Dynamics::scaled(0.3), &times).unwrap();
    let b = magnetization_decay(&s, &Dynamics::scaled(-0.3), &times).unwrap();
    for (x, y) in f.values.iter().zip(&b.values) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn pulsed_forward_backward_echo_reverses_at_short_tau() {
    let s = cluster(6, 9, 1e4);
    let f = build_sequence(&SequenceSpec::new(SequenceKind::P16, 0.3, 1e-6, Direction::Forward)).unwrap();
    let b = build_sequence(&SequenceSpec::new(SequenceKind::P16, 0.3, 1e-6, Direction::Backward).with_min_separation(0.0)).unwrap();
    let times = stroboscopic_times(f.cycle_time, 20, 5);
    let m = loschmidt_echo(&s, &Dynamics::pulsed(f), &Dynamics::pulsed(b), &times).unwrap();
    assert!(m.values.iter().all(|v| (v - 1.0).abs() < 1e-3), "{:?}", m.values);
}

#[test]
fn mqc_identities_on_eight_spins() {
    let s = cluster(8, 17, 1.0);
    let times = [0.0, 0.7, 1.9, 3.4, 6.0];
    // imperfect reversal: forward delta H^y, backward by a mismatched scale
    let fwd = Dynamics::scaled(0.4);
    let bwd = Dynamics::Ideal { hamiltonian: HamiltonianSpec::DipolarSecular { axis: Axis::Y, scale: -0.4 } };
    let perturbed = Dynamics::Ideal { hamiltonian: HamiltonianSpec::DipolarSecular { axis: Axis::Z, scale: -0.4 } };
    for backward in [&bwd, &perturbed] {
        let series = mqc_series(&s, &fwd, backward, &times, 32).unwrap();
        let echo = if backward.scaling() == fwd.scaling() {
            Some(loschmidt_echo(&s, &fwd, backward, &times).unwrap())
        } else {
            None
        };
        for (i, sp) in series.iter().enumerate() {
            if let Some(e) = &echo {
                assert!((sp.total() - e.values[i]).abs() < 1e-10);
            }
            assert!((sp.total() - sp.s_phi[0]).abs() < 1e-10);
            for (&q, &v) in sp.orders.iter().zip(&sp.s_q) {
                if let Some(mirror) = sp.intensity(-q) {
                    assert!((v - mirror).abs() < 1e-10);
                }
                if q % 2 != 0 {
                    assert!(v.abs() < 1e-12, "odd order {q}: {v:e}");
                }
            }
        }
    }
    let series = mqc_series(&s, &fwd, &bwd, &times, 32).unwrap();
    for sp in &series {
        let czz = direct_oto_commutator(&s, &fwd, sp.t).unwrap();
        assert!((otoc_second_moment(sp) - czz).abs() < 1e-8, "t={}: {} vs {czz}", sp.t, otoc_second_moment(sp));
    }
}

#[test]
fn mqc_echo_equals_loschmidt_with_pulsed_backward() {
    let s = cluster(6, 2, 1e4);
    let b = build_sequence(&SequenceSpec::new(SequenceKind::P8, 0.3, 5e-6, Direction::Backward)).unwrap();
    let f = build_sequence(&SequenceSpec::new(SequenceKind::P8, 0.3, 5e-6, Direction::Forward)).unwrap();
    let times = stroboscopic_times(f.cycle_time, 10, 4);
    let (fd, bd) = (Dynamics::pulsed(f), Dynamics::pulsed(b));
    let series = mqc_series(&s, &fd, &bd, &times, 16).unwrap();
    let echo = loschmidt_echo(&s, &fd, &bd, &times).unwrap();
    for (sp, m) in series.iter().zip(&echo.values) {
        assert!((sp.total() - m).abs() < 1e-10);
    }
}

#[test]
fn correlated_cluster_grows_then_saturates() {
    let s = cluster(10, 3, 1.0);
    let times: Vec<f64> = (0..12).map(|k| 0.05 * k as f64).chain([30.0, 40.0, 50.0]).collect();
    let series = mqc_series(&s, &Dynamics::scaled(1.0), &Dynamics::scaled(-1.0), &times, 32).unwrap();
    let widths: Vec<f64> = series.iter().map(|sp| otoc_second_moment(sp).max(0.0).sqrt()).collect();
    for w in widths[..12].windows(2) {
        assert!(w[1] >= w[0] - 1e-9, "{widths:?}");
    }
    // bounded by the largest reachable order, and flat at late times
    assert!(widths.iter().all(|&w| w <= 10.0), "{widths:?}");
    let late = &widths[12..];
    let spread = late.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - late.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 0.15 * late[0], "{late:?}");
    assert!(late[0] > 2.0 * widths[2], "{widths:?}");
}

#[test]
fn ideal_collapse_is_exact() {
    let s = cluster(6, 1, 1e4);
    let curves: Vec<_> = [0.2, 0.3, 0.4]
        .iter()
        .map(|&delta| {
            let times: Vec<f64> = (0..100).map(|k| 5e-6 * k as f64 / delta).collect();
            magnetization_decay(&s, &Dynamics::scaled(delta), &times).unwrap()
        })
        .collect();
    assert!(self_time_collapse(&curves, 100, None).unwrap().max_spread < 1e-10);
}

#[test]
fn pulsed_collapse_within_two_percent() {
    let dbar = 1e4;
    let s = cluster(6, 5, dbar);
    let curves: Vec<_> = [0.2, 0.3, 0.4]
        .iter()
        .map(|&delta| {
            let seq = build_sequence(&SequenceSpec::new(SequenceKind::P8, delta, 2e-6, Direction::Forward)).unwrap();
            let count = (5.0 / dbar / delta / seq.cycle_time).ceil() as usize + 2;
            magnetization_decay(&s, &Dynamics::pulsed(seq.clone()), &stroboscopic_times(seq.cycle_time, count, 1)).unwrap()
        })
        .collect();
    let rep = self_time_collapse(&curves, 200, Some(5.0 / dbar)).unwrap();
    assert!(rep.max_spread < 0.02, "{}", rep.max_spread);
}

#[test]
fn echo_with_pulse_errors_decays() {
    let s = cluster(8, 11, 1e4);
    let err = ErrorModel { flip_error: 0.02, pulse_width: 1e-6, ..Default::default() };
    let f = build_sequence(&SequenceSpec::new(SequenceKind::P16, 0.3, 5e-6, Direction::Forward).with_error(err)).unwrap();
    let b = build_sequence(&SequenceSpec::new(SequenceKind::P16, 0.3, 5e-6, Direction::Backward).with_error(err)).unwrap();
    let times = stroboscopic_times(f.cycle_time, 40, 6);
    let m = loschmidt_echo(&s, &Dynamics::pulsed(f), &Dynamics::pulsed(b), &times).unwrap();
    assert_eq!(m.values[0], 1.0);
    for w in m.values.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{:?}", m.values);
    }
    assert!(*m.values.last().unwrap() < 0.95, "{:?}", m.values);
}

#[test]
fn normalized_echo_rejects_mismatched_grids() {
    let s = cluster(4, 1, 1.0);
    let a = loschmidt_echo(&s, &Dynamics::scaled(0.2), &Dynamics::scaled(-0.2), &[0.0, 1.0]).unwrap();
    let b = loschmidt_echo(&s, &Dynamics::scaled(0.2), &Dynamics::scaled(-0.2), &[0.0, 2.0]).unwrap();
    assert!(normalized_echo(&a, &b).is_err());
    let n = normalized_echo(&a, &a).unwrap();
    assert!(n.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    assert!(loschmidt_echo(&s, &Dynamics::scaled(0.2), &Dynamics::scaled(-0.3), &[0.0]).is_err());
    let _ = dipolar_secular(&s, Axis::Y).unwrap();
}
