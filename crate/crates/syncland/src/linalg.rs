//! Dense Hermitian eigensolvers.
//!
//! All spectra in the crate go through here. Real symmetric matrices are
//! handed to faer's divide-and-conquer solver; a Hermitian `A + iB` is
//! embedded as the real symmetric `[[A, -B], [B, A]]`, whose spectrum is the
//! Hermitian spectrum with every eigenvalue doubled.

use faer::{Mat, Side};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Eigenvalues in ascending order together with orthonormal eigenvectors
/// (one per column, in the same order).
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

fn check_finite<T: Scalar>(m: &DMatrix<T>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let (re, im) = m[(i, j)].parts();
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn check_square<T>(m: &DMatrix<T>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn real_embedding<T: Scalar>(m: &DMatrix<T>) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (re, im) = m[(i % n, j % n)].parts();
        match (i < n, j < n) {
            (true, true) | (false, false) => re,
            (true, false) => -im,
            (false, true) => im,
        }
    })
}

/// All eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_square(m)?;
    check_finite(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut values = to_faer(m)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::EigenSolver {
            n,
            detail: format!("{e:?}"),
        })?;
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Full eigendecomposition of a real symmetric matrix.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen> {
    check_square(m)?;
    check_finite(m)?;
    let n = m.nrows();
    let evd = to_faer(m)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigenSolver {
            n,
            detail: format!("{e:?}"),
        })?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let values = order.iter().map(|&k| s[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    Ok(SymmetricEigen { values, vectors })
}

/// All eigenvalues of a Hermitian (or real symmetric) matrix, ascending.
pub fn hermitian_eigenvalues<T: Scalar>(m: &DMatrix<T>) -> Result<Vec<f64>> {
    check_square(m)?;
    if !T::IS_COMPLEX {
        return symmetric_eigenvalues(&m.map(|x| x.re()));
    }
    check_finite(m)?;
    let doubled = symmetric_eigenvalues(&real_embedding(m))?;
    Ok(doubled.into_iter().step_by(2).collect())
}

/// Operator norm `max |lambda|` of a Hermitian matrix.
pub fn hermitian_norm<T: Scalar>(m: &DMatrix<T>) -> Result<f64> {
    let values = hermitian_eigenvalues(m)?;
    Ok(match (values.first(), values.last()) {
        (Some(lo), Some(hi)) => lo.abs().max(hi.abs()),
        _ => 0.0,
    })
}

/// Largest deviation from Hermitian symmetry, `max |m_ij - conj(m_ji)|`.
pub fn hermitian_defect<T: Scalar>(m: &DMatrix<T>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conjugate()).modulus());
        }
    }
    worst
}
