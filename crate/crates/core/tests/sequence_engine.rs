// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

use spinscale_core::hamiltonians::dipolar_secular;
use spinscale_core::sequence::*;
use spinscale_core::spin::*;

fn cluster(n: usize, seed: u64, dbar: f64) -> SpinSystem {
    SpinSystem::random_cluster(n, 1.0, CouplingRule::DipolarAngular, seed).unwrap().normalized_to(dbar).unwrap()
}

fn with_offsets(s: SpinSystem, scale: f64) -> SpinSystem {
    let n = s.n_spins();
    s.with_zeeman_offsets((0..n).map(|i| scale * (1.0 + 0.37 * i as f64)).collect()).unwrap()
}

fn relative(a: &OperatorMatrix, b: &OperatorMatrix) -> f64 {
    a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm()
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn numeric_zeroth_order_matches_symbolic_on_six_spins() {
    let s = cluster(6, 21, 1e4);
    let hy = dipolar_secular(&s, Axis::Y).unwrap();
    for &delta in &[0.0, 0.1, 0.2, 0.3, 0.42] {
        for (dir, sign) in [(Direction::Forward, 1.0), (Direction::Backward, -1.0)] {
            let seq = build_sequence(&SequenceSpec::new(SequenceKind::P8, delta, 10e-6, dir)).unwrap();
            let h0 = numeric_average_hamiltonian(&seq, &s, 0).unwrap();
            let err = h0.sub(&hy.scaled(sign * delta)).unwrap().frobenius_norm() / hy.frobenius_norm();
            assert!(err < 1e-10, "delta={delta} {dir:?}: {err:e}");
            let avg = symbolic_average(&seq).unwrap();
            let (a, b) = ((1.0 - sign * delta) / 3.0, (1.0 + 2.0 * sign * delta) / 3.0);
            for (w, e) in avg.weights.iter().zip([a, b, a]) {
                assert!((w - e).abs() < 1e-14);
            }
        }
    }
}

#[test]
fn forward_backward_duality() {
    let s = with_offsets(cluster(4, 3, 1e4), 2e3);
    for &delta in &[0.1, 0.25, 0.45] {
        let f = build_sequence(&SequenceSpec::new(SequenceKind::P8, delta, 10e-6, Direction::Forward)).unwrap();
        let b = build_sequence(&SequenceSpec::new(SequenceKind::P8, delta, 10e-6, Direction::Backward)).unwrap();
        let hf = numeric_average_hamiltonian(&f, &s, 0).unwrap();
        let hb = numeric_average_hamiltonian(&b, &s, 0).unwrap();
        let r = hf.add(&hb).unwrap().max_abs() / hf.max_abs();
        assert!(r < 1e-12, "delta={delta}: {r:e}");
    }
}

#[test]
fn symbolic_coefficients_are_numeric_projections() {
    // Project the numeric average onto H_d^y and H_d^z and compare with the
    // symbolic coefficients, for every pulsed kind.
    let s = cluster(4, 8, 1.0);
    let hy = dipolar_secular(&s, Axis::Y).unwrap();
    let hz = dipolar_secular(&s, Axis::Z).unwrap();
    let gram = |a: &OperatorMatrix, b: &OperatorMatrix| trace_product(a.matrix(), b.matrix()).re;
    let (gyy, gyz, gzz) = (gram(&hy, &hy), gram(&hy, &hz), gram(&hz, &hz));
    let det = gyy * gzz - gyz * gyz;
    for kind in [SequenceKind::P8, SequenceKind::P16, SequenceKind::Free] {
        for dir in [Direction::Forward, Direction::Backward] {
            let seq = build_sequence(&SequenceSpec::new(kind, 0.33, 10e-6, dir)).unwrap();
            let h0 = numeric_average_hamiltonian(&seq, &s, 0).unwrap();
            let (py, pz) = (gram(&h0, &hy), gram(&h0, &hz));
            let cy = (py * gzz - pz * gyz) / det;
            let cz = (pz * gyy - py * gyz) / det;
            let avg = symbolic_average(&seq).unwrap();
            assert!((cy - avg.c_y).abs() < 1e-12 && (cz - avg.c_z).abs() < 1e-12, "{kind:?}");
        }
    }
}

#[test]
fn sixteen_pulse_cancels_first_order() {
    let s = with_offsets(cluster(4, 4, 1e4), 3e3);
    let p8 = build_sequence(&SequenceSpec::new(SequenceKind::P8, 0.3, 5e-6, Direction::Forward)).unwrap();
    let p16 = build_sequence(&SequenceSpec::new(SequenceKind::P16, 0.3, 5e-6, Direction::Forward)).unwrap();
    let h8 = numeric_average_hamiltonian(&p8, &s, 1).unwrap();
    let h16 = numeric_average_hamiltonian(&p16, &s, 1).unwrap();
    assert!(h16.max_abs() < 1e-12, "{:e}", h16.max_abs());
    assert!(h8.max_abs() > 1e-3, "{:e}", h8.max_abs());
}

#[test]
fn first_order_matches_symbolic_for_every_hit() {
    // Without offsets H^1 is a multiple of -i[H^y, H^z].
    let s = cluster(4, 12, 1.0);
    let hy = dipolar_secular(&s, Axis::Y).unwrap();
    let hz = dipolar_secular(&s, Axis::Z).unwrap();
    let basis = hy.commutator(&hz).unwrap().matrix() * C64::new(0.0, -1.0);
    let fwd = delay_pattern_8p(Direction::Forward).unwrap();
    for p in search_phase_patterns(&fwd, AffineTarget::for_direction(Direction::Forward)) {
        let mut spec = SequenceSpec::new(SequenceKind::P8, 0.2, 1.0, Direction::Forward);
        spec.phases = Some(p.to_vec());
        let seq = build_sequence(&spec).unwrap();
        let h1 = numeric_average_hamiltonian(&seq, &s, 1).unwrap();
        let expected = &basis * C64::new(symbolic_average(&seq).unwrap().first_order.unwrap(), 0.0);
        assert!((h1.matrix() - expected).camax() < 1e-12 * (1.0 + h1.max_abs()));
    }
}

#[test]
fn search_hits_cross_verified_in_both_directions() {
    let s = with_offsets(cluster(4, 5, 1.0), 0.7);
    let hy = dipolar_secular(&s, Axis::Y).unwrap();
    for (dir, sign) in [(Direction::Forward, 1.0), (Direction::Backward, -1.0)] {
        let delays = delay_pattern_8p(dir).unwrap();
        let hits = search_phase_patterns(&delays, AffineTarget::for_direction(dir));
        assert!(!hits.is_empty());
        for p in hits {
            let mut spec = SequenceSpec::new(SequenceKind::P8, 0.25, 1.0, dir);
            spec.phases = Some(p.to_vec());
            let seq = build_sequence(&spec).unwrap();
            let h0 = numeric_average_hamiltonian(&seq, &s, 0).unwrap();
            // Zeeman terms refocus, so only the scaled dipolar part survives
            assert!(relative(&h0, &hy.scaled(sign * 0.25)) < 1e-12);
        }
    }
}

#[test]
fn unequal_axis_target_has_no_hits() {
    let fwd = delay_pattern_8p(Direction::Forward).unwrap();
    let target = AffineTarget { c_y: (0, 1), c_z: (0, 1) };
    assert!(search_phase_patterns(&fwd, target).is_empty());
}

#[test]
fn magnus_order_scaling_with_offsets() {
    let s = with_offsets(cluster(6, 5, 1e3), 2e3);
    let hy = dipolar_secular(&s, Axis::Y).unwrap();
    let taus = [1e-6, 2e-6, 4e-6, 8e-6];
    let mut slopes = Vec::new();
    for kind in [SequenceKind::P8, SequenceKind::P16] {
        let errs: Vec<f64> = taus
            .iter()
            .map(|&tau| {
                let seq = build_sequence(&SequenceSpec::new(kind, 0.4, tau, Direction::Forward)).unwrap();
                let u = cycle_propagator(&seq, &s).unwrap();
                let target = Propagator::new(&hy.scaled(0.4)).unwrap().unitary(seq.cycle_time);
                (u.matrix() - target).norm()
            })
            .collect();
        slopes.push(loglog_slope(&taus, &errs));
    }
    assert!(slopes[0] >= 1.7, "{slopes:?}");
    assert!(slopes[1] - slopes[0] >= 0.7, "{slopes:?}");
}

#[test]
fn zero_delta_cycle_tends_to_identity() {
    let s = cluster(4, 6, 1e4);
    let dim = s.dim();
    let id = nalgebra::DMatrix::<C64>::identity(dim, dim);
    let hz = dipolar_secular(&s, Axis::Z).unwrap();
    let mut last = f64::INFINITY;
    for tau in [8e-6, 4e-6, 2e-6, 1e-6] {
        let seq = build_sequence(&SequenceSpec::new(SequenceKind::P8, 0.0, tau, Direction::Forward)).unwrap();
        let dev = (cycle_propagator(&seq, &s).unwrap().matrix() - &id).norm();
        // a single free delay of the same length moves much further
        let free = (Propagator::new(&hz).unwrap().unitary(seq.cycle_time) - &id).norm();
        assert!(dev < 0.1 * free, "tau={tau}: {dev:e} vs {free:e}");
        assert!(dev < last);
        last = dev;
    }
}

#[test]
fn finite_width_error_suppressed_by_sixteen_pulses() {
    let s = cluster(6, 5, 1e4);
    let hy = dipolar_secular(&s, Axis::Y).unwrap();
    let mut excess = Vec::new();
    for kind in [SequenceKind::P8, SequenceKind::P16] {
        let dev = |width: f64| {
            let err = ErrorModel { pulse_width: width, ..Default::default() };
            let seq = build_sequence(&SequenceSpec::new(kind, 0.3, 10e-6, Direction::Forward).with_error(err)).unwrap();
            let mut u = cycle_propagator(&seq, &s).unwrap().into_matrix();
            if kind == SequenceKind::P8 {
                u = &u * &u;
            }
            let target = Propagator::new(&hy.scaled(0.3)).unwrap().unitary(240e-6);
            (u - target).norm()
        };
        excess.push(dev(2e-6) - dev(0.0));
    }
    assert!(excess[0] > 0.0);
    assert!(excess[1] < 0.6 * excess[0], "{excess:?}");
}

#[test]
fn registry_round_trip_of_every_kind() {
    let dir = tempfile::tempdir().unwrap();
    let mut reg = SequenceRegistry::open(dir.path().join("seq.json")).unwrap();
    for kind in [SequenceKind::P8, SequenceKind::P16] {
        for d in [Direction::Forward, Direction::Backward] {
            let seq = build_sequence(&SequenceSpec::new(kind, 0.2, 10e-6, d)).unwrap();
            assert!(reg.append(RegistryRecord::from_sequence(&seq).unwrap()).unwrap());
        }
    }
    let reg = SequenceRegistry::open(dir.path().join("seq.json")).unwrap();
    assert_eq!(reg.records().len(), 4);
    assert!(reg.records().iter().all(|r| r.verification.closes && r.verification.zeeman_residual == 0.0));
}
