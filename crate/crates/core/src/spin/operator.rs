// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense operators on the `2^N` computational basis.
//!
//! Basis state `s` is an `N`-bit integer; bit `i` describes spin `i`, with a
//! cleared bit meaning spin-up (`m = +1/2`).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::linalg::{conjugate, matmul};
use super::system::SpinSystem;
use crate::error::{check_capacity, Result, SpinError};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }
}

pub mod basis {
    //! Bit-level helpers for computational basis states.

    /// `m_i` of spin `i` in basis state `state`.
    #[inline]
    pub fn spin_m(state: usize, i: usize) -> f64 {
        if state >> i & 1 == 0 {
            0.5
        } else {
            -0.5
        }
    }

    /// Total magnetic quantum number `sum_i m_i`.
    #[inline]
    pub fn total_m(state: usize, n_spins: usize) -> f64 {
        n_spins as f64 / 2.0 - (state & ((1 << n_spins) - 1)).count_ones() as f64
    }

    /// Twice the total `m`, as an exact integer.
    #[inline]
    pub fn twice_total_m(state: usize, n_spins: usize) -> i64 {
        n_spins as i64 - 2 * (state & ((1 << n_spins) - 1)).count_ones() as i64
    }

    /// `true` means spin-up.
    pub fn encode(config: &[bool]) -> usize {
        config.iter().enumerate().fold(0, |acc, (i, &up)| if up { acc } else { acc | 1 << i })
    }

    pub fn decode(state: usize, n_spins: usize) -> Vec<bool> {
        (0..n_spins).map(|i| state >> i & 1 == 0).collect()
    }
}

/// Action of `I_i^axis` on basis state `s`: returns `(s', amplitude)` with
/// `I_i^axis |s> = amplitude |s'>`.
#[inline]
pub fn apply_single(axis: Axis, i: usize, s: usize) -> (usize, C64) {
    let up = s >> i & 1 == 0;
    match axis {
        Axis::Z => (s, C64::new(if up { 0.5 } else { -0.5 }, 0.0)),
        Axis::X => (s ^ (1 << i), C64::new(0.5, 0.0)),
        // I^y |up> = (i/2)|down>, I^y |down> = (-i/2)|up>
        Axis::Y => (s ^ (1 << i), C64::new(0.0, if up { 0.5 } else { -0.5 })),
    }
}

/// Dense `2^N x 2^N` operator tagged with its spin count.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    n_spins: usize,
    matrix: DMatrix<C64>,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(n_spins: usize, matrix: DMatrix<C64>) -> Result<Self> {
        check_capacity(n_spins)?;
        let dim = 1usize << n_spins;
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(SpinError::DimensionMismatch { left: matrix.nrows(), right: dim });
        }
        let hermitian = hermitian_deviation(&matrix) <= 1e-12 * matrix.camax().max(f64::MIN_POSITIVE);
        Ok(Self { n_spins, matrix, hermitian })
    }

    /// Build and require Hermiticity.
    pub fn hermitian(n_spins: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let op = Self::new(n_spins, matrix)?;
        op.require_hermitian()?;
        Ok(op)
    }

    pub fn zeros(n_spins: usize) -> Result<Self> {
        check_capacity(n_spins)?;
        let dim = 1 << n_spins;
        Ok(Self { n_spins, matrix: DMatrix::zeros(dim, dim), hermitian: true })
    }

    pub fn identity(n_spins: usize) -> Result<Self> {
        check_capacity(n_spins)?;
        let dim = 1 << n_spins;
        Ok(Self { n_spins, matrix: DMatrix::identity(dim, dim), hermitian: true })
    }

    pub fn require_hermitian(&self) -> Result<()> {
        if self.hermitian {
            Ok(())
        } else {
            Err(SpinError::NotHermitian { deviation: hermitian_deviation(&self.matrix) })
        }
    }

    pub(crate) fn from_parts(n_spins: usize, matrix: DMatrix<C64>, hermitian: bool) -> Self {
        Self { n_spins, matrix, hermitian }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(SpinError::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::from_parts(self.n_spins, &self.matrix + &other.matrix, self.hermitian && other.hermitian))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::from_parts(self.n_spins, &self.matrix - &other.matrix, self.hermitian && other.hermitian))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_parts(self.n_spins, &self.matrix * C64::new(factor, 0.0), self.hermitian)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::new(self.n_spins, matmul(&self.matrix, &other.matrix)).expect("dimension already checked"))
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let m = matmul(&self.matrix, &other.matrix) - matmul(&other.matrix, &self.matrix);
        Ok(Self::new(self.n_spins, m).expect("dimension already checked"))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.n_spins, self.matrix.adjoint(), self.hermitian)
    }

    /// `U A U^dagger` for a unitary `u` given as a raw matrix.
    pub fn conjugated_by(&self, u: &DMatrix<C64>) -> Self {
        let m = conjugate(u, &self.matrix);
        Self::from_parts(self.n_spins, m, self.hermitian)
    }
}

/// `max |A - A^dagger|`.
pub fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `Tr[A B]` in O(dim^2) without forming the product.
pub fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for r in 0..n {
        for s in 0..n {
            acc += a[(r, s)] * b[(s, r)];
        }
    }
    acc
}

/// `Tr[(I^z)^2] = N 2^N / 4`, the normalization shared by every correlator.
pub fn correlator_norm(n_spins: usize) -> f64 {
    n_spins as f64 * (1u64 << n_spins) as f64 / 4.0
}

/// `Tr[A B] / Tr[(I^z)^2]`.
pub fn correlator(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<f64> {
    a.check_same(b)?;
    Ok(trace_product(&a.matrix, &b.matrix).re / correlator_norm(a.n_spins))
}

/// Single-spin operator `I_i^axis`.
pub fn single_spin_operator(n_spins: usize, i: usize, axis: Axis) -> Result<OperatorMatrix> {
    check_capacity(n_spins)?;
    if i >= n_spins {
        return Err(SpinError::InvalidArgument(format!("spin index {i} out of range for N={n_spins}")));
    }
    let dim = 1 << n_spins;
    let mut m = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        let (t, amp) = apply_single(axis, i, s);
        m[(t, s)] += amp;
    }
    Ok(OperatorMatrix::from_parts(n_spins, m, true))
}

/// `I^axis = sum_i I_i^axis`.
pub fn collective_operator(system: &SpinSystem, axis: Axis) -> OperatorMatrix {
    collective_for(system.n_spins(), axis).expect("spin system already capacity-checked")
}

pub fn collective_for(n_spins: usize, axis: Axis) -> Result<OperatorMatrix> {
    check_capacity(n_spins)?;
    let dim = 1 << n_spins;
    let mut m = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        for i in 0..n_spins {
            let (t, amp) = apply_single(axis, i, s);
            m[(t, s)] += amp;
        }
    }
    Ok(OperatorMatrix::from_parts(n_spins, m, true))
}

/// `exp(-i angle sum_i n.I_i)` for a unit vector `n`, built as a tensor power
/// of the single-spin rotation.
pub fn global_rotation(n_spins: usize, axis: [f64; 3], angle: f64) -> Result<DMatrix<C64>> {
    check_capacity(n_spins)?;
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if norm == 0.0 {
        return Err(SpinError::InvalidArgument("rotation axis must be nonzero".into()));
    }
    let [nx, ny, nz] = axis.map(|c| c / norm);
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    // exp(-i a n.sigma/2) = cos(a/2) - i sin(a/2) n.sigma, basis (up, down)
    let u = [
        [C64::new(c, -s * nz), C64::new(-s * ny, -s * nx)],
        [C64::new(s * ny, -s * nx), C64::new(c, s * nz)],
    ];
    Ok(tensor_power(n_spins, &u))
}

/// `u ⊗ u ⊗ ... ⊗ u` in the bit-per-spin basis.
pub fn tensor_power(n_spins: usize, u: &[[C64; 2]; 2]) -> DMatrix<C64> {
    let dim = 1usize << n_spins;
    DMatrix::from_fn(dim, dim, |r, s| {
        let mut amp = C64::new(1.0, 0.0);
        for i in 0..n_spins {
            amp *= u[r >> i & 1][s >> i & 1];
            if amp == ZERO {
                break;
            }
        }
        amp
    })
}
