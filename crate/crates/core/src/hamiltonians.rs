// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Spin Hamiltonians: secular dipolar along any axis, Zeeman, double quantum.
//!
//! The dipolar term follows `sum_{i<j} d_ij (3 I_i^a I_j^a - I_i . I_j)`, which
//! makes `H^x + H^y + H^z = 0` for any coupling matrix.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpinError};
use crate::spin::{apply_single, Axis, OperatorMatrix, SpinSystem, C64};

/// Accumulate `coef * I_i^a I_j^b` into `m`.
fn add_two_body(m: &mut DMatrix<C64>, n_spins: usize, i: usize, j: usize, a: Axis, b: Axis, coef: f64) {
    for s in 0..1usize << n_spins {
        let (t1, amp1) = apply_single(b, j, s);
        let (t2, amp2) = apply_single(a, i, t1);
        m[(t2, s)] += amp1 * amp2 * coef;
    }
}

/// Secular dipolar Hamiltonian quantized along `axis`.
pub fn dipolar_secular(system: &SpinSystem, axis: Axis) -> Result<OperatorMatrix> {
    let n = system.n_spins();
    let dim = system.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for (i, j, d) in system.pairs()? {
        for other in Axis::ALL {
            let coef = if other == axis { 2.0 * d } else { -d };
            add_two_body(&mut m, n, i, j, other, other, coef);
        }
    }
    OperatorMatrix::hermitian(n, m)
}

/// `-sum_i omega_i I_i^z`.
pub fn zeeman(system: &SpinSystem) -> OperatorMatrix {
    let n = system.n_spins();
    let dim = system.dim();
    let offsets = system.zeeman_offsets();
    let mut m = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        let e: f64 = offsets.iter().enumerate().map(|(i, w)| -w * crate::spin::basis::spin_m(s, i)).sum();
        m[(s, s)] = C64::new(e, 0.0);
    }
    OperatorMatrix::hermitian(n, m).expect("diagonal real matrix is Hermitian")
}

/// `sum_{i<j} d_ij (I_i^x I_j^x - I_i^y I_j^y)`, changing coherence order by +-2.
pub fn double_quantum(system: &SpinSystem) -> Result<OperatorMatrix> {
    let n = system.n_spins();
    let dim = system.dim();
    let mut m = DMatrix::zeros(dim, dim);
    for (i, j, d) in system.pairs()? {
        add_two_body(&mut m, n, i, j, Axis::X, Axis::X, d);
        add_two_body(&mut m, n, i, j, Axis::Y, Axis::Y, -d);
    }
    OperatorMatrix::hermitian(n, m)
}

/// Internal rotating-frame Hamiltonian `-sum_i omega_i I_i^z + H_d^z`.
pub fn internal(system: &SpinSystem) -> Result<OperatorMatrix> {
    dipolar_secular(system, Axis::Z)?.add(&zeeman(system))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HamiltonianSpec {
    DipolarSecular {
        axis: Axis,
        #[serde(default = "one")]
        scale: f64,
    },
    Zeeman {
        #[serde(default = "one")]
        scale: f64,
    },
    DoubleQuantum {
        #[serde(default = "one")]
        scale: f64,
    },
    Composite {
        terms: Vec<HamiltonianSpec>,
    },
}

fn one() -> f64 {
    1.0
}

impl HamiltonianSpec {
    /// `delta * H_d^y`, the scaled target of the forward/backward sequences.
    pub fn scaled_y(delta: f64) -> Self {
        HamiltonianSpec::DipolarSecular { axis: Axis::Y, scale: delta }
    }

    pub fn build(&self, system: &SpinSystem) -> Result<OperatorMatrix> {
        match self {
            HamiltonianSpec::DipolarSecular { axis, scale } => Ok(dipolar_secular(system, *axis)?.scaled(*scale)),
            HamiltonianSpec::Zeeman { scale } => Ok(zeeman(system).scaled(*scale)),
            HamiltonianSpec::DoubleQuantum { scale } => Ok(double_quantum(system)?.scaled(*scale)),
            HamiltonianSpec::Composite { terms } => {
                let mut acc = OperatorMatrix::zeros(system.n_spins())?;
                for term in terms {
                    acc = acc.add(&term.build(system)?)?;
                }
                if terms.is_empty() {
                    return Err(SpinError::InvalidArgument("composite Hamiltonian without terms".into()));
                }
                Ok(acc)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{collective_operator, global_rotation, CouplingRule};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn cluster(n: usize, seed: u64) -> SpinSystem {
        SpinSystem::random_cluster(n, 1.3, CouplingRule::DipolarAngular, seed).unwrap()
    }

    fn sorted_eigs(op: &OperatorMatrix) -> Vec<f64> {
        let mut v: Vec<f64> = op.matrix().clone().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn pair_spectrum_triplet_singlet() {
        let d = 2.5;
        let s = SpinSystem::from_couplings(DMatrix::from_row_slice(2, 2, &[0.0, d, d, 0.0])).unwrap();
        let h = dipolar_secular(&s, Axis::Z).unwrap();
        let e = sorted_eigs(&h);
        let expected = [-d, 0.0, d / 2.0, d / 2.0];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{e:?}");
        }
    }

    #[test]
    fn axis_sum_vanishes_and_traceless() {
        for seed in 0..4 {
            let s = cluster(5, seed);
            let hs: Vec<_> = Axis::ALL.iter().map(|&a| dipolar_secular(&s, a).unwrap()).collect();
            let sum = hs[0].add(&hs[1]).unwrap().add(&hs[2]).unwrap();
            assert!(sum.max_abs() < 1e-12);
            for h in &hs {
                assert!(h.trace().norm() < 1e-12);
            }
            assert!(double_quantum(&s).unwrap().trace().norm() < 1e-12);
        }
    }

    #[test]
    fn rotation_covariance() {
        let s = cluster(3, 9);
        let n = 3;
        let hx = dipolar_secular(&s, Axis::X).unwrap();
        let hy = dipolar_secular(&s, Axis::Y).unwrap();
        let hz = dipolar_secular(&s, Axis::Z).unwrap();
        // R = exp(-i pi/2 I^x): R^dagger I^z R = I^y, so R^dagger H^z R = H^y
        let rx = global_rotation(n, [1.0, 0.0, 0.0], FRAC_PI_2).unwrap();
        let via_x = rx.adjoint() * hz.matrix() * &rx;
        assert!((via_x - hy.matrix()).camax() < 1e-10);
        // about y: I^z -> -I^x (axis permutation z -> x)
        let ry = global_rotation(n, [0.0, 1.0, 0.0], FRAC_PI_2).unwrap();
        let via_y = ry.adjoint() * hz.matrix() * &ry;
        assert!((via_y - hx.matrix()).camax() < 1e-10);
        // pi rotations leave every dipolar axis invariant
        let rpi = global_rotation(n, [1.0, 0.0, 0.0], PI).unwrap();
        assert!((rpi.adjoint() * hz.matrix() * &rpi - hz.matrix()).camax() < 1e-10);
    }

    #[test]
    fn zeeman_cases() {
        let s = SpinSystem::uncoupled(3).unwrap();
        assert_eq!(zeeman(&s).max_abs(), 0.0);
        let w = 2.0 * PI * 100.0;
        let s1 = SpinSystem::uncoupled(1).unwrap().with_zeeman_offsets(vec![w]).unwrap();
        let z = zeeman(&s1);
        assert!((z.matrix()[(0, 0)].re + PI * 100.0).abs() < 1e-12);
        assert!((z.matrix()[(1, 1)].re - PI * 100.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_zeeman_commutes_with_secular_dipolar() {
        let s = cluster(4, 1).with_zeeman_offsets(vec![3.0; 4]).unwrap();
        let c = zeeman(&s).commutator(&dipolar_secular(&s, Axis::Z).unwrap()).unwrap();
        assert!(c.max_abs() < 1e-12);
    }

    #[test]
    fn double_quantum_pair_structure() {
        let d = 1.0;
        let s = SpinSystem::from_couplings(DMatrix::from_row_slice(2, 2, &[0.0, d, d, 0.0])).unwrap();
        let h = double_quantum(&s).unwrap();
        // Oracle: I^x I^x - I^y I^y = (I+I+ + I-I-)/2 couples only |uu> (0) and |dd> (3)
        for r in 0..4 {
            for c in 0..4 {
                let expected = if (r, c) == (0, 3) || (r, c) == (3, 0) { 0.5 * d } else { 0.0 };
                assert!((h.matrix()[(r, c)].re - expected).abs() < 1e-14, "({r},{c})");
                assert!(h.matrix()[(r, c)].im.abs() < 1e-14);
            }
        }
        let z = collective_operator(&s, Axis::Z);
        assert!(h.commutator(&z).unwrap().max_abs() > 0.1);
    }

    #[test]
    fn zero_couplings_and_missing() {
        let s = SpinSystem::from_couplings(DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(double_quantum(&s).unwrap().max_abs(), 0.0);
        let bare = SpinSystem::uncoupled(2).unwrap();
        assert_eq!(dipolar_secular(&bare, Axis::Z).unwrap_err(), SpinError::MissingCouplings);
    }

    #[test]
    fn spec_composite() {
        let s = cluster(3, 2).with_zeeman_offsets(vec![1.0, -2.0, 0.5]).unwrap();
        let spec: HamiltonianSpec = serde_json::from_str(
            r#"{"kind":"composite","terms":[{"kind":"dipolar_secular","axis":"z"},{"kind":"zeeman"}]}"#,
        )
        .unwrap();
        let built = spec.build(&s).unwrap();
        assert!((built.matrix() - internal(&s).unwrap().matrix()).camax() < 1e-14);
        let y = HamiltonianSpec::scaled_y(0.25).build(&s).unwrap();
        assert!((y.matrix() - dipolar_secular(&s, Axis::Y).unwrap().scaled(0.25).matrix()).camax() < 1e-14);
    }
}
