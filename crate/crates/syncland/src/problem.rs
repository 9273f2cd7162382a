//! Problem data: costs, sign vectors, sphere configurations, phases and
//! Laplacians, together with the objective `<C, Y Y^*>` and the certificate
//! matrices built from it.
//!
//! Everything here is immutable once constructed. Constructors validate the
//! invariants of each type, so downstream code can rely on them without
//! re-checking.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{row_norm, row_re_dot, Complex64, Scalar};

/// Asymmetry above which symmetrization is logged as a warning.
pub const ASYMMETRY_WARNING: f64 = 1e-8;

/// Tolerance on the unit row norms of a [`SphereConfig`].
pub const SPHERE_TOL: f64 = 1e-12;

fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

/// The `n x n` real symmetric or complex Hermitian cost matrix `C` (or a
/// coupling matrix `A`).
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricCost<T: Scalar = f64> {
    entries: DMatrix<T>,
}

impl<T: Scalar> SymmetricCost<T> {
    /// Builds a cost from a square matrix, replacing it by its Hermitian part
    /// `(M + M^*)/2`.
    pub fn new(m: DMatrix<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidParameter("cost matrix must be non-empty".into()));
        }
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let (re, im) = m[(i, j)].parts();
                if !re.is_finite() || !im.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        let defect = linalg::hermitian_defect(&m);
        if defect > ASYMMETRY_WARNING {
            log::warn!("cost matrix asymmetric by {defect:e}; using its Hermitian part");
        }
        let n = m.nrows();
        let half = T::from_parts(0.5, 0.0);
        let entries = DMatrix::from_fn(n, n, |i, j| {
            let s = (m[(i, j)] + m[(j, i)].conjugate()) * half;
            if i == j {
                T::from_parts(s.re(), 0.0)
            } else {
                s
            }
        });
        Ok(Self { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_complex(&self) -> bool {
        T::IS_COMPLEX
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<T> {
        self.entries
    }

    /// `|| C ||_op`, the largest absolute eigenvalue.
    pub fn operator_norm(&self) -> Result<f64> {
        linalg::hermitian_norm(&self.entries)
    }

    /// `diag(s) C diag(s)^*` for a unit-modulus vector `s`.
    pub fn conjugated_by(&self, s: &SignVector<T>) -> Result<Self> {
        check_dim("sign vector length", self.n(), s.n())?;
        let z = s.entries();
        let entries = DMatrix::from_fn(self.n(), self.n(), |i, j| {
            z[i] * self.entries[(i, j)] * z[j].conjugate()
        });
        Ok(Self { entries })
    }
}

impl SymmetricCost<f64> {
    /// The same matrix viewed as a Hermitian cost.
    pub fn to_complex(&self) -> SymmetricCost<Complex64> {
        SymmetricCost {
            entries: self.entries.map(|x| Complex64::new(x, 0.0)),
        }
    }
}

/// A real or complex cost read from a file, where the kind is only known at
/// run time.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyCost {
    Real(SymmetricCost<f64>),
    Complex(SymmetricCost<Complex64>),
}

impl AnyCost {
    pub fn n(&self) -> usize {
        match self {
            AnyCost::Real(c) => c.n(),
            AnyCost::Complex(c) => c.n(),
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, AnyCost::Complex(_))
    }

    /// The real cost; fails for complex input.
    pub fn into_real(self) -> Result<SymmetricCost<f64>> {
        match self {
            AnyCost::Real(c) => Ok(c),
            AnyCost::Complex(_) => Err(Error::InvalidParameter("expected a real matrix, found complex entries".into())),
        }
    }
}

/// Ground-truth vector `z` with unit-modulus entries (`+-1` when real).
#[derive(Clone, Debug, PartialEq)]
pub struct SignVector<T: Scalar = f64> {
    entries: DVector<T>,
}

impl<T: Scalar> SignVector<T> {
    pub fn new(entries: DVector<T>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("sign vector must be non-empty".into()));
        }
        for (index, z) in entries.iter().enumerate() {
            let modulus = z.modulus();
            let ok = if T::IS_COMPLEX {
                (modulus - 1.0).abs() <= SPHERE_TOL
            } else {
                modulus == 1.0
            };
            if !ok {
                return Err(Error::NotUnitModulus {
                    index,
                    value: modulus,
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn ones(n: usize) -> Self {
        Self {
            entries: DVector::from_element(n, T::one()),
        }
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &DVector<T> {
        &self.entries
    }

    /// `z` as an `n x 1` sphere configuration.
    pub fn as_config(&self) -> SphereConfig<T> {
        SphereConfig {
            rows: DMatrix::from_column_slice(self.n(), 1, self.entries.as_slice()),
        }
    }

    /// Entrywise product `s o z`.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        check_dim("sign vector length", self.n(), other.n())?;
        Ok(Self {
            entries: self.entries.component_mul(&other.entries),
        })
    }
}

impl SignVector<f64> {
    pub fn from_signs(signs: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(signs))
    }

    pub fn to_complex(&self) -> SignVector<Complex64> {
        SignVector {
            entries: self.entries.map(|x| Complex64::new(x, 0.0)),
        }
    }
}

impl SignVector<Complex64> {
    /// `z_j = exp(i phase_j)`.
    pub fn from_phases(phases: &[f64]) -> Self {
        Self {
            entries: DVector::from_iterator(
                phases.len(),
                phases.iter().map(|&t| Complex64::new(t.cos(), t.sin())),
            ),
        }
    }
}

/// An `n x r` matrix `Y` whose rows lie on the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereConfig<T: Scalar = f64> {
    rows: DMatrix<T>,
}

impl<T: Scalar> SphereConfig<T> {
    /// Wraps `rows`, requiring every row norm to be within [`SPHERE_TOL`] of 1.
    pub fn new(rows: DMatrix<T>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(Error::InvalidParameter("sphere configuration must be non-empty".into()));
        }
        for i in 0..rows.nrows() {
            let norm = row_norm(&rows, i);
            if !norm.is_finite() || (norm - 1.0).abs() > SPHERE_TOL {
                return Err(Error::NotOnSphere { row: i, norm });
            }
        }
        Ok(Self { rows })
    }

    /// Normalizes every row of `rows` onto the sphere.
    pub fn normalize(mut rows: DMatrix<T>) -> Result<Self> {
        if rows.nrows() == 0 || rows.ncols() == 0 {
            return Err(Error::InvalidParameter("sphere configuration must be non-empty".into()));
        }
        for i in 0..rows.nrows() {
            let norm = row_norm(&rows, i);
            if !(norm.is_finite() && norm > 0.0) {
                return Err(Error::RetractionSingularity { row: i });
            }
            for k in 0..rows.ncols() {
                rows[(i, k)] = rows[(i, k)].unscale(norm);
            }
        }
        Ok(Self { rows })
    }

    /// Every row equal to `z_i v^T`.
    pub fn rank_one(z: &SignVector<T>, v: &DVector<T>) -> Result<Self> {
        Self::new(z.entries() * v.transpose())
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn r(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &DMatrix<T> {
        &self.rows
    }

    pub fn into_rows(self) -> DMatrix<T> {
        self.rows
    }

    /// The Gram matrix `Y Y^*`.
    pub fn gram(&self) -> DMatrix<T> {
        &self.rows * self.rows.adjoint()
    }

    /// Largest deviation of a row norm from 1.
    pub fn max_norm_defect(&self) -> f64 {
        (0..self.n())
            .map(|i| (row_norm(&self.rows, i) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

impl SphereConfig<f64> {
    /// Points `(cos theta_i, sin theta_i)` on the circle.
    pub fn from_phases(theta: &PhaseVector) -> Self {
        let rows = DMatrix::from_fn(theta.n(), 2, |i, k| {
            if k == 0 {
                theta.angles()[i].cos()
            } else {
                theta.angles()[i].sin()
            }
        });
        Self { rows }
    }
}

/// Oscillator phases `theta`, read modulo `2 pi`, with a global coupling `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector {
    angles: Vec<f64>,
    coupling_constant: f64,
}

impl PhaseVector {
    pub fn new(angles: Vec<f64>, coupling_constant: f64) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidParameter("phase vector must be non-empty".into()));
        }
        if let Some(i) = angles.iter().position(|a| !a.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        if !(coupling_constant.is_finite() && coupling_constant > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling constant must be positive, got {coupling_constant}"
            )));
        }
        Ok(Self {
            angles,
            coupling_constant,
        })
    }

    /// Phases with unit coupling.
    pub fn from_angles(angles: Vec<f64>) -> Result<Self> {
        Self::new(angles, 1.0)
    }

    pub fn n(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn coupling_constant(&self) -> f64 {
        self.coupling_constant
    }

    /// Angles wrapped into `[0, 2 pi)`.
    pub fn wrapped(&self) -> Vec<f64> {
        self.angles.iter().map(|a| a.rem_euclid(2.0 * PI)).collect()
    }
}

/// The diagonal scaling `D` of a preconditioned Laplacian `D^{-1/2} L D^{-1/2}`.
#[derive(Clone, Debug, PartialEq)]
pub enum Preconditioner {
    Identity,
    Diagonal(Vec<f64>),
}

/// A certificate matrix `S = Lambda - C` with `Lambda` real diagonal,
/// possibly rescaled by a diagonal preconditioner.
#[derive(Clone, Debug, PartialEq)]
pub struct Laplacian<T: Scalar = f64> {
    entries: DMatrix<T>,
    preconditioner: Preconditioner,
}

impl<T: Scalar> Laplacian<T> {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn preconditioner(&self) -> &Preconditioner {
        &self.preconditioner
    }

    /// All eigenvalues, ascending.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(&self.entries)
    }

    pub fn operator_norm(&self) -> Result<f64> {
        linalg::hermitian_norm(&self.entries)
    }

    /// `D^{-1/2} L D^{-1/2}`. Diagonals compose multiplicatively when `self`
    /// is already preconditioned.
    pub fn precondition(&self, d: &[f64]) -> Result<Self> {
        check_dim("preconditioner length", self.n(), d.len())?;
        for (index, &value) in d.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::PreconditionerNotPositive { index, value });
            }
        }
        let scale: Vec<f64> = d.iter().map(|x| x.sqrt()).collect();
        let n = self.n();
        let entries = DMatrix::from_fn(n, n, |i, j| {
            self.entries[(i, j)] * T::from_parts(1.0 / (scale[i] * scale[j]), 0.0)
        });
        let preconditioner = match &self.preconditioner {
            Preconditioner::Identity => Preconditioner::Diagonal(d.to_vec()),
            Preconditioner::Diagonal(prev) => {
                Preconditioner::Diagonal(prev.iter().zip(d).map(|(a, b)| a * b).collect())
            }
        };
        Ok(Self {
            entries,
            preconditioner,
        })
    }
}

/// Applying a preconditioner choice that may be the identity.
pub fn precondition<T: Scalar>(l: &Laplacian<T>, d: &Preconditioner) -> Result<Laplacian<T>> {
    match d {
        Preconditioner::Identity => Ok(l.clone()),
        Preconditioner::Diagonal(d) => l.precondition(d),
    }
}

/// `C Y`, checking that the shapes and kinds agree.
pub(crate) fn cost_times<T: Scalar>(c: &SymmetricCost<T>, y: &SphereConfig<T>) -> Result<DMatrix<T>> {
    check_dim("configuration rows", c.n(), y.n())?;
    Ok(c.entries() * y.rows())
}

/// `Re diag(C Y Y^*)` given `CY`.
pub(crate) fn weighted_degrees<T: Scalar>(cy: &DMatrix<T>, y: &DMatrix<T>) -> Vec<f64> {
    (0..y.nrows()).map(|i| row_re_dot(y, i, cy, i)).collect()
}

/// `Im diag(C z z^*)` for a complex ground truth; zero in the real case.
pub(crate) fn degree_imaginary_parts<T: Scalar>(c: &SymmetricCost<T>, z: &SignVector<T>) -> Vec<f64> {
    let cz = c.entries() * z.entries();
    (0..z.n())
        .map(|i| (cz[i] * z.entries()[i].conjugate()).im())
        .collect()
}

/// The objective `<C, Y Y^*>` (its real part in the Hermitian case).
pub fn objective<T: Scalar>(c: &SymmetricCost<T>, y: &SphereConfig<T>) -> Result<f64> {
    let cy = cost_times(c, y)?;
    Ok(objective_from_product(&cy, y.rows()))
}

pub(crate) fn objective_from_product<T: Scalar>(cy: &DMatrix<T>, y: &DMatrix<T>) -> f64 {
    crate::scalar::frobenius_dot(y, cy)
}

fn ddiag_minus_cost<T: Scalar>(c: &SymmetricCost<T>, degrees: &[f64]) -> DMatrix<T> {
    let n = c.n();
    DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j {
            T::from_parts(degrees[i], 0.0)
        } else {
            T::zero()
        };
        d - c.entries()[(i, j)]
    })
}

/// `S(Y) = Re ddiag(C Y Y^*) - C`, the matrix whose products with `Y`
/// and tangent directions give the first- and second-order conditions.
pub fn certificate_matrix<T: Scalar>(c: &SymmetricCost<T>, y: &SphereConfig<T>) -> Result<Laplacian<T>> {
    let cy = cost_times(c, y)?;
    let degrees = weighted_degrees(&cy, y.rows());
    Ok(Laplacian {
        entries: ddiag_minus_cost(c, &degrees),
        preconditioner: Preconditioner::Identity,
    })
}

/// The dual certificate `L(z) = Re ddiag(C z z^*) - C`.
pub fn laplacian<T: Scalar>(c: &SymmetricCost<T>, z: &SignVector<T>) -> Result<Laplacian<T>> {
    certificate_matrix(c, &z.as_config())
}

/// `Re diag(C z z^*)`: the natural degree preconditioner.
pub fn degree_vector<T: Scalar>(c: &SymmetricCost<T>, z: &SignVector<T>) -> Result<Vec<f64>> {
    let y = z.as_config();
    let cy = cost_times(c, &y)?;
    Ok(weighted_degrees(&cy, y.rows()))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn complete_graph(n: usize) -> SymmetricCost {
        SymmetricCost::new(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 })).unwrap()
    }

    fn constant_rows(n: usize, row: &[f64]) -> SphereConfig {
        SphereConfig::new(DMatrix::from_fn(n, row.len(), |_, k| row[k])).unwrap()
    }

    #[test]
    fn objective_of_aligned_triangle_is_edge_sum() {
        let c = complete_graph(3);
        let y = constant_rows(3, &[1.0, 0.0]);
        assert_eq!(objective(&c, &y).unwrap(), 6.0);
    }

    #[test]
    fn objective_with_orthogonal_rows_is_diagonal_trace() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, -4.0, 1.0, -3.0, 5.0, -4.0, 5.0, 7.0]);
        let c = SymmetricCost::new(m).unwrap();
        let y = SphereConfig::new(DMatrix::identity(3, 4)).unwrap();
        assert_eq!(objective(&c, &y).unwrap(), 6.0);
    }

    #[test]
    fn objective_of_rank_one_truth_is_n_squared() {
        let z = SignVector::from_signs(&[1.0, -1.0, 1.0]).unwrap();
        let c = SymmetricCost::new(z.entries() * z.entries().transpose()).unwrap();
        let y = SphereConfig::rank_one(&z, &DVector::from_column_slice(&[1.0, 0.0])).unwrap();
        assert_eq!(objective(&c, &y).unwrap(), 9.0);
    }

    #[test]
    fn objective_dimension_mismatch() {
        let c = complete_graph(3);
        let y = constant_rows(4, &[1.0]);
        assert!(matches!(objective(&c, &y), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn certificate_matrix_of_aligned_rows_is_graph_laplacian() {
        let c = complete_graph(3);
        let y = constant_rows(3, &[1.0, 0.0]);
        let s = certificate_matrix(&c, &y).unwrap();
        let expected = DMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 } else { -1.0 });
        assert_eq!(s.entries(), &expected);
    }

    #[test]
    fn certificate_matrix_matches_laplacian_for_rank_one_configs() {
        let z = SignVector::from_signs(&[1.0, -1.0, -1.0, 1.0]).unwrap();
        let m = DMatrix::from_fn(4, 4, |i, j| ((i * 7 + j * 7) % 5) as f64 - 2.0);
        let c = SymmetricCost::new(m).unwrap();
        let y = SphereConfig::rank_one(&z, &DVector::from_column_slice(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(certificate_matrix(&c, &y).unwrap().entries(), laplacian(&c, &z).unwrap().entries());
    }

    #[test]
    fn certificate_matrix_identity_with_all_ones_laplacian() {
        // S(Y) = L(1) - ddiag(L(1) Y Y^T): an independent route through L(1).
        let m = DMatrix::from_fn(5, 5, |i, j| ((i + 1) as f64 * 0.7 - (j + 2) as f64 * 0.3).sin() + ((i + j) as f64).cos());
        let c = SymmetricCost::new(m).unwrap();
        let raw = DMatrix::from_fn(5, 3, |i, k| ((i * 3 + k) as f64 * 1.3).sin() + 0.2);
        let y = SphereConfig::normalize(raw).unwrap();
        let l1 = laplacian(&c, &SignVector::ones(5)).unwrap();
        let lyy = l1.entries() * y.gram();
        let oracle = DMatrix::from_fn(5, 5, |i, j| l1.entries()[(i, j)] - if i == j { lyy[(i, i)] } else { 0.0 });
        let s = certificate_matrix(&c, &y).unwrap();
        assert!((s.entries() - oracle).amax() < 1e-12);
    }

    #[test]
    fn complete_graph_laplacian_spectrum() {
        let l = laplacian(&complete_graph(3), &SignVector::ones(3)).unwrap();
        let s = l.spectrum().unwrap();
        assert!(s[0].abs() < 1e-12 && (s[1] - 3.0).abs() < 1e-12 && (s[2] - 3.0).abs() < 1e-12);
        for n in [5, 12] {
            let s = laplacian(&complete_graph(n), &SignVector::ones(n)).unwrap().spectrum().unwrap();
            assert!((s[1] - n as f64).abs() < 1e-10 && (s[n - 1] - n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_one_cost_laplacian() {
        let z = SignVector::from_signs(&[1.0, 1.0, -1.0, 1.0, -1.0]).unwrap();
        let c = SymmetricCost::new(z.entries() * z.entries().transpose()).unwrap();
        let l = laplacian(&c, &z).unwrap();
        let expected = DMatrix::identity(5, 5) * 5.0 - z.entries() * z.entries().transpose();
        assert!((l.entries() - &expected).amax() < 1e-14);
        let s = l.spectrum().unwrap();
        assert!(s[0].abs() < 1e-12);
        assert!(s[1..].iter().all(|v| (v - 5.0).abs() < 1e-12));
    }

    #[test]
    fn laplacian_annihilates_z() {
        let z = SignVector::from_signs(&[1.0, -1.0, 1.0, 1.0]).unwrap();
        let m = DMatrix::from_fn(4, 4, |i, j| (i as f64 - j as f64).powi(2) + 0.5);
        let c = SymmetricCost::new(m).unwrap();
        let l = laplacian(&c, &z).unwrap();
        assert!((l.entries() * z.entries()).amax() < 1e-12);
    }

    #[test]
    fn precondition_by_ones_is_identity() {
        let l = laplacian(&complete_graph(4), &SignVector::ones(4)).unwrap();
        let p = l.precondition(&[1.0; 4]).unwrap();
        assert_eq!(p.entries(), l.entries());
        assert_eq!(precondition(&l, &Preconditioner::Identity).unwrap(), l);
    }

    #[test]
    fn degree_preconditioning_gives_normalized_laplacian() {
        // Path 0 - 1 - 2 - 3 with a weighted chord.
        let mut a = DMatrix::zeros(4, 4);
        for (i, j, w) in [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (0, 3, 0.5)] {
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        let c = SymmetricCost::new(a.clone()).unwrap();
        let z = SignVector::ones(4);
        let d = degree_vector(&c, &z).unwrap();
        let normalized = laplacian(&c, &z).unwrap().precondition(&d).unwrap();
        let expected = DMatrix::from_fn(4, 4, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            delta - a[(i, j)] / (d[i] * d[j]).sqrt()
        });
        assert!((normalized.entries() - expected).amax() < 1e-14);
    }

    #[test]
    fn precondition_rejects_nonpositive_entries() {
        let l = laplacian(&complete_graph(3), &SignVector::ones(3)).unwrap();
        assert!(matches!(
            l.precondition(&[1.0, 0.0, 2.0]),
            Err(Error::PreconditionerNotPositive { index: 1, .. })
        ));
    }

    #[test]
    fn scaling_preconditioner_scales_spectrum() {
        let mut a = DMatrix::zeros(5, 5);
        for (i, j, w) in [(0, 1, 1.0), (1, 2, 3.0), (2, 3, 1.0), (3, 4, 2.0), (4, 0, 1.0), (0, 2, 0.5)] {
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        let c = SymmetricCost::new(a).unwrap();
        let l = laplacian(&c, &SignVector::ones(5)).unwrap();
        let d = [1.0, 2.0, 0.5, 3.0, 1.5];
        let scaled: Vec<f64> = d.iter().map(|x| 4.0 * x).collect();
        let s1 = l.precondition(&d).unwrap().spectrum().unwrap();
        let s2 = l.precondition(&scaled).unwrap().spectrum().unwrap();
        for (a, b) in s1.iter().zip(&s2) {
            assert!((a / 4.0 - b).abs() < 1e-12);
        }
        let ratio1 = s1[4] / s1[1];
        let ratio2 = s2[4] / s2[1];
        assert!((ratio1 - ratio2).abs() <= 1e-12 * ratio1);
    }

    #[test]
    fn symmetrizes_asymmetric_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 3.0]);
        let c = SymmetricCost::new(m).unwrap();
        assert_eq!(c.entries()[(0, 1)], 3.0);
        assert_eq!(c.entries()[(1, 0)], 3.0);
    }

    #[test]
    fn hermitian_part_of_complex_input() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.5),
                Complex64::new(0.0, 2.0),
                Complex64::new(0.0, -2.0),
                Complex64::new(3.0, 0.0),
            ],
        );
        let c = SymmetricCost::new(m).unwrap();
        assert_eq!(c.entries()[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(c.entries()[(0, 1)], c.entries()[(1, 0)].conj());
        assert!(c.is_complex());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SymmetricCost::new(DMatrix::<f64>::zeros(2, 3)).is_err());
        let mut m = DMatrix::<f64>::zeros(2, 2);
        m[(0, 1)] = f64::INFINITY;
        assert!(matches!(SymmetricCost::new(m), Err(Error::NonFinite { .. })));
        assert!(SignVector::from_signs(&[1.0, 0.5]).is_err());
        assert!(SphereConfig::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0])).is_err());
        assert!(PhaseVector::new(vec![0.0, f64::NAN], 1.0).is_err());
        assert!(PhaseVector::new(vec![0.0], 0.0).is_err());
    }
}
