// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Time evolution generated by a fixed Hermitian operator.
//!
//! The Hamiltonian is diagonalized once; every later call reuses the
//! eigenbasis, so sweeping many times costs one decomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::linalg::{conjugate_adjoint, gemm, Op};
use super::operator::{correlator_norm, OperatorMatrix, C64};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct Propagator {
    n_spins: usize,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<C64>,
    /// Set when the eigenvectors are real, enabling real back-transforms.
    real_vectors: Option<DMatrix<f64>>,
}

impl Propagator {
    pub fn new(hamiltonian: &OperatorMatrix) -> Result<Self> {
        hamiltonian.require_hermitian()?;
        let m = hamiltonian.matrix();
        // Dipolar and Zeeman terms are real in the product basis; the real
        // symmetric solver is several times faster there.
        let (eigenvalues, eigenvectors, real_vectors) = if m.iter().all(|z| z.im == 0.0) {
            let eig = SymmetricEigen::new(m.map(|z| z.re));
            (eig.eigenvalues, eig.eigenvectors.map(|v| C64::new(v, 0.0)), Some(eig.eigenvectors))
        } else {
            let eig = SymmetricEigen::new(m.clone());
            (eig.eigenvalues, eig.eigenvectors, None)
        };
        Ok(Self { n_spins: hamiltonian.n_spins(), eigenvalues, eigenvectors, real_vectors })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.eigenvectors
    }

    fn phases(&self, t: f64) -> Vec<C64> {
        self.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -l * t)).collect()
    }

    /// `exp(-i H t)`.
    pub fn unitary(&self, t: f64) -> DMatrix<C64> {
        let phases = self.phases(t);
        let mut scaled = self.eigenvectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        gemm(&scaled, Op::Plain, &self.eigenvectors, Op::Adjoint)
    }

    /// Heisenberg picture `exp(iHt) A exp(-iHt)`.
    pub fn evolve(&self, op: &OperatorMatrix, t: f64) -> OperatorMatrix {
        let u = self.unitary(t);
        OperatorMatrix::from_parts(op.n_spins(), conjugate_adjoint(&u, op.matrix()), op.is_hermitian())
    }

    /// Express `op` in the eigenbasis, `V^dagger A V`.
    pub fn to_eigenbasis(&self, op: &OperatorMatrix) -> DMatrix<C64> {
        conjugate_adjoint(&self.eigenvectors, op.matrix())
    }

    /// Heisenberg picture `U(t)^dagger A U(t)` for `A` already in the
    /// eigenbasis (see [`Self::to_eigenbasis`]), returned in the product basis.
    pub fn evolve_from_eigenbasis(&self, op_eigen: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
        let ph = self.phases(-t);
        let x = DMatrix::from_fn(op_eigen.nrows(), op_eigen.ncols(), |r, s| op_eigen[(r, s)] * ph[r] * ph[s].conj());
        match &self.real_vectors {
            Some(v) => {
                let vt = v.transpose();
                let re = v * x.map(|z| z.re) * &vt;
                let im = v * x.map(|z| z.im) * &vt;
                re.zip_map(&im, C64::new)
            }
            None => gemm(&gemm(&self.eigenvectors, Op::Plain, &x, Op::Plain), Op::Plain, &self.eigenvectors, Op::Adjoint),
        }
    }

    /// `Tr[A(t) B] / Tr[(I^z)^2]` for every `t`, with `A(t)` in the
    /// Heisenberg picture. One basis change, then O(dim^2) per time.
    pub fn correlation_series(&self, a: &OperatorMatrix, b: &OperatorMatrix, times: &[f64]) -> Vec<f64> {
        let at = self.to_eigenbasis(a);
        let bt = self.to_eigenbasis(b);
        let n = at.nrows();
        // Pair products A_rs B_sr only depend on (r, s), precompute them once.
        let mut weights = Vec::with_capacity(n * n);
        for r in 0..n {
            for s in 0..n {
                weights.push(at[(r, s)] * bt[(s, r)]);
            }
        }
        let norm = correlator_norm(self.n_spins);
        times
            .iter()
            .map(|&t| {
                let ph = self.phases(-t);
                let mut acc = 0.0;
                for r in 0..n {
                    let pr = ph[r];
                    for s in 0..n {
                        // e^{i(l_r - l_s)t}
                        acc += (weights[r * n + s] * pr * ph[s].conj()).re;
                    }
                }
                acc / norm
            })
            .collect()
    }
}

/// One-shot `exp(-i H t)` through the Pade scaling-and-squaring exponential.
pub fn exp_pade(hamiltonian: &OperatorMatrix, t: f64) -> DMatrix<C64> {
    (hamiltonian.matrix() * C64::new(0.0, -t)).exp()
}

/// `exp(iHt) A exp(-iHt)`.
pub fn evolve(hamiltonian: &OperatorMatrix, t: f64, op: &OperatorMatrix) -> Result<OperatorMatrix> {
    Ok(Propagator::new(hamiltonian)?.evolve(op, t))
}

/// `max |U U^dagger - 1|`.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    let p = gemm(u, Op::Plain, u, Op::Adjoint);
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((p[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}
