//! Thin wrappers over faer for the dense complex operations used throughout.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = Mat<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn zeros(r: usize, c: usize) -> CMat {
    Mat::zeros(r, c)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn from_rows(rows: &[Vec<C64>]) -> CMat {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    Mat::from_fn(n, m, |i, j| rows[i][j])
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

/// `(A + A†)/2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

pub fn trace(a: &CMat) -> C64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

pub fn frobenius(a: &CMat) -> f64 {
    a.norm_l2()
}

pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

/// Eigenvalues of a Hermitian matrix in nondecreasing order.
pub fn herm_eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Solver(format!("Hermitian eigensolver: {e:?}")))
}

/// Eigenpairs of a Hermitian matrix; columns of the returned matrix are the
/// orthonormal eigenvectors.
pub fn herm_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solver(format!("Hermitian eigensolver: {e:?}")))?;
    let vals = (0..a.nrows()).map(|i| evd.S()[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

/// General complex eigendecomposition `A = V diag(λ) V⁻¹`.
pub fn eigen(a: &CMat) -> Result<(Vec<C64>, CMat)> {
    let evd = a
        .eigen()
        .map_err(|e| Error::Solver(format!("eigensolver: {e:?}")))?;
    let vals = (0..a.nrows()).map(|i| evd.S()[i]).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    a.singular_values()
        .map_err(|e| Error::Solver(format!("SVD: {e:?}")))
}

/// Singular values (nonincreasing) and the right singular vectors.
pub fn svd_right(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let svd = a.svd().map_err(|e| Error::Solver(format!("SVD: {e:?}")))?;
    let n = svd.S().dim();
    let s = (0..n).map(|i| svd.S()[i].re).collect();
    Ok((s, svd.V().to_owned()))
}

pub fn inverse(a: &CMat) -> CMat {
    a.full_piv_lu().inverse()
}

pub fn solve(a: &CMat, b: &CMat) -> CMat {
    a.full_piv_lu().solve(b)
}

/// Ratio of largest to smallest singular value.
pub fn condition(a: &CMat) -> Result<f64> {
    let s = singular_values(a)?;
    let max = s.first().copied().unwrap_or(0.0);
    let min = s.last().copied().unwrap_or(0.0);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_reconstructs() {
        let a = from_rows(&[
            vec![C64::new(1.0, 0.5), C64::new(2.0, 0.0)],
            vec![C64::new(0.0, -1.0), C64::new(-3.0, 0.1)],
        ]);
        let (vals, v) = eigen(&a).unwrap();
        for (k, lam) in vals.iter().enumerate() {
            for i in 0..2 {
                let av: C64 = (0..2).map(|j| a[(i, j)] * v[(j, k)]).sum();
                assert!((av - lam * v[(i, k)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn inverse_and_solve_agree() {
        let a = from_rows(&[
            vec![C64::new(2.0, 1.0), C64::new(1.0, 0.0)],
            vec![C64::new(0.5, -1.0), C64::new(3.0, 0.0)],
        ]);
        let b = identity(2);
        let x = solve(&a, &b);
        let inv = inverse(&a);
        assert!(frobenius(&(&x - &inv)) < 1e-13);
        assert!(frobenius(&(&(&a * &inv) - &identity(2))) < 1e-13);
    }

    #[test]
    fn hermitian_eigenvalues_sorted() {
        let a = from_rows(&[
            vec![C64::new(2.0, 0.0), C64::new(0.0, 1.0)],
            vec![C64::new(0.0, -1.0), C64::new(2.0, 0.0)],
        ]);
        let v = herm_eigenvalues(&a).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] - 3.0).abs() < 1e-14);
    }
}
