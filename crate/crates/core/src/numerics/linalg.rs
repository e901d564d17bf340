//! Symmetric-matrix kernels: pseudoinverse, positive-semidefinite flooring,
//! and spectral square roots.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalue cutoff used when no explicit tolerance is given.
pub fn auto_tolerance(lambda_max: f64, dim: usize) -> f64 {
    lambda_max.abs() * dim as f64 * f64::EPSILON * 10.0
}

/// Pseudoinverse of a symmetric matrix together with its numerical rank.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub matrix: DMatrix<f64>,
    pub rank: usize,
}

fn check_square_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidMatrix(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    Ok(())
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Moore-Penrose inverse of a symmetric matrix via eigendecomposition.
///
/// Eigenvalues with absolute value at or below `tol` are treated as zero;
/// `None` selects [`auto_tolerance`] from the largest absolute eigenvalue.
pub fn moore_penrose(m: &DMatrix<f64>, tol: Option<f64>) -> Result<PseudoInverse> {
    check_square_finite(m)?;
    let dim = m.nrows();
    if dim == 0 {
        return Ok(PseudoInverse { matrix: DMatrix::zeros(0, 0), rank: 0 });
    }
    if dim == 1 {
        let v = m[(0, 0)];
        let cut = tol.unwrap_or_else(|| auto_tolerance(v, 1));
        return Ok(if v.abs() > cut && v != 0.0 {
            PseudoInverse { matrix: DMatrix::from_element(1, 1, 1.0 / v), rank: 1 }
        } else {
            PseudoInverse { matrix: DMatrix::zeros(1, 1), rank: 0 }
        });
    }

    let eig = SymmetricEigen::new(symmetrize(m));
    let lambda_max = eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let cut = tol.unwrap_or_else(|| auto_tolerance(lambda_max, dim));

    let mut inv_vals = DVector::zeros(dim);
    let mut rank = 0;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > cut && lambda != 0.0 {
            inv_vals[i] = 1.0 / lambda;
            rank += 1;
        }
    }
    let v = &eig.eigenvectors;
    let matrix = v * DMatrix::from_diagonal(&inv_vals) * v.transpose();
    Ok(PseudoInverse { matrix: symmetrize(&matrix), rank })
}

/// Symmetrizes and floors negative eigenvalues at zero.
pub fn floor_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = symmetrize(m);
    if sym.nrows() <= 1 {
        return sym.map(|v| v.max(0.0));
    }
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return sym;
    }
    let vals = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    symmetrize(&(v * DMatrix::from_diagonal(&vals) * v.transpose()))
}

/// Returns `L` with `L Lᵀ = m`, built from the spectral decomposition with
/// negative eigenvalues floored at zero. Works for singular `m`.
pub fn spectral_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square_finite(m)?;
    let eig = SymmetricEigen::new(symmetrize(m));
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Quadratic form `xᵀ A x`, summed in index order.
pub fn quadratic_form(a: &DMatrix<f64>, x: &[f64]) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += a[(i, j)] * x[j];
        }
        acc += x[i] * row;
    }
    acc
}
