// Copyright 2026 Spinscale Contributors
// SPDX-License-Identifier: Apache-2.0

//! Complex matrix products on top of `matrixmultiply::zgemm`.

use matrixmultiply::CGemmOption;
use nalgebra::DMatrix;

use super::operator::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    /// Use the matrix as is.
    Plain,
    /// Use the conjugate transpose.
    Adjoint,
}

/// `op(a) * op(b)`.
pub fn gemm(a: &DMatrix<C64>, op_a: Op, b: &DMatrix<C64>, op_b: Op) -> DMatrix<C64> {
    let (m, k) = match op_a {
        Op::Plain => (a.nrows(), a.ncols()),
        Op::Adjoint => (a.ncols(), a.nrows()),
    };
    let (kb, n) = match op_b {
        Op::Plain => (b.nrows(), b.ncols()),
        Op::Adjoint => (b.ncols(), b.nrows()),
    };
    assert_eq!(k, kb, "inner dimensions differ");
    let mut c = DMatrix::<C64>::zeros(m, n);
    if m == 0 || n == 0 {
        return c;
    }
    // zgemm has no conjugation flag: conjugate a copy, then read it transposed.
    let a_conj;
    let a = match op_a {
        Op::Plain => a,
        Op::Adjoint => {
            a_conj = a.map(|z| z.conj());
            &a_conj
        }
    };
    let b_conj;
    let b = match op_b {
        Op::Plain => b,
        Op::Adjoint => {
            b_conj = b.map(|z| z.conj());
            &b_conj
        }
    };
    let (rsa, csa) = strides(op_a, a.nrows());
    let (rsb, csb) = strides(op_b, b.nrows());
    // SAFETY: Complex<f64> is repr(C) {re, im}, i.e. layout-compatible with
    // [f64; 2]; the strides describe exactly the column-major storage of `a`,
    // `b` and `c`, whose shapes were checked above.
    unsafe {
        matrixmultiply::zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            rsa,
            csa,
            b.as_ptr() as *const [f64; 2],
            rsb,
            csb,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

fn strides(op: Op, rows: usize) -> (isize, isize) {
    match op {
        Op::Plain => (1, rows as isize),
        Op::Adjoint => (rows as isize, 1),
    }
}

pub fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    gemm(a, Op::Plain, b, Op::Plain)
}

/// `u * a * u^dagger`.
pub fn conjugate(u: &DMatrix<C64>, a: &DMatrix<C64>) -> DMatrix<C64> {
    gemm(&matmul(u, a), Op::Plain, u, Op::Adjoint)
}

/// `u^dagger * a * u`.
pub fn conjugate_adjoint(u: &DMatrix<C64>, a: &DMatrix<C64>) -> DMatrix<C64> {
    matmul(&gemm(u, Op::Adjoint, a, Op::Plain), u)
}
