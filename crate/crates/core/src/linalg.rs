//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Unique symmetric positive definite square root through a symmetric
/// eigendecomposition.
pub fn spd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::NumericalBreakdown("square root of a non-square matrix".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalBreakdown("non-finite matrix entry".into()));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::NumericalBreakdown(format!(
            "matrix is not positive definite (eigenvalues {:?})",
            eig.eigenvalues.as_slice()
        )));
    }
    let roots = eig.eigenvalues.map(f64::sqrt);
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].abs();
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Extreme generalized eigenvalues of the pencil `(a, b)` with `b` SPD,
/// i.e. the range of `zᵀ a z / zᵀ b z`.
pub fn generalized_eigen_range(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, f64)> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NumericalBreakdown("Cholesky factorization failed".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalBreakdown("singular Cholesky factor".into()))?;
    let c = &l_inv * a * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigenvalues();
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * scale))
}
