//! Geometry of the product of spheres: tangent projection, retraction, and
//! the alignment of a configuration with a rank-one ground truth.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{SignVector, SphereConfig};
use crate::scalar::{row_norm, row_re_dot, Scalar};

fn same_shape<T: Scalar>(y: &SphereConfig<T>, v: &DMatrix<T>) -> Result<()> {
    if v.nrows() != y.n() {
        return Err(Error::DimensionMismatch {
            what: "tangent rows",
            expected: y.n(),
            found: v.nrows(),
        });
    }
    if v.ncols() != y.r() {
        return Err(Error::DimensionMismatch {
            what: "tangent columns",
            expected: y.r(),
            found: v.ncols(),
        });
    }
    Ok(())
}

/// Orthogonal projection onto `T_Y = { V : Re diag(Y V^*) = 0 }`, row by row
/// `v_i - Re<v_i, y_i> y_i`.
pub fn tangent_project<T: Scalar>(y: &SphereConfig<T>, v: &DMatrix<T>) -> Result<DMatrix<T>> {
    same_shape(y, v)?;
    Ok(project_unchecked(y.rows(), v))
}

pub(crate) fn project_unchecked<T: Scalar>(y: &DMatrix<T>, v: &DMatrix<T>) -> DMatrix<T> {
    let mut out = v.clone();
    for i in 0..y.nrows() {
        let c = T::from_parts(row_re_dot(y, i, v, i), 0.0);
        for k in 0..y.ncols() {
            out[(i, k)] -= c * y[(i, k)];
        }
    }
    out
}

/// Metric-projection retraction `(y_i + v_i) / |y_i + v_i|`.
pub fn retract<T: Scalar>(y: &SphereConfig<T>, v: &DMatrix<T>) -> Result<SphereConfig<T>> {
    same_shape(y, v)?;
    let moved = y.rows() + v;
    for i in 0..moved.nrows() {
        let scale = row_norm(y.rows(), i) + row_norm(v, i);
        if row_norm(&moved, i) <= 1e-12 * scale {
            return Err(Error::RetractionSingularity { row: i });
        }
    }
    SphereConfig::normalize(moved)
}

/// Decomposition `diag(z)^* Y = rho 1 v^T + W` with `W^T D 1 = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct Alignment<T: Scalar = f64> {
    /// Weighted correlation with the ground truth, in `[0, 1]`.
    pub rho: f64,
    /// Unit direction `v`; the first basis vector when degenerate.
    #[serde(skip)]
    pub direction: DVector<T>,
    /// Set when `rho == 0` and `v` is arbitrary.
    pub degenerate: bool,
    /// `|| D^{1/2} W ||_F^2`, computed directly from the residual.
    pub weighted_residual: f64,
    /// `tr D`.
    pub trace_d: f64,
}

pub fn alignment<T: Scalar>(y: &SphereConfig<T>, z: &SignVector<T>, d: &[f64]) -> Result<Alignment<T>> {
    let n = y.n();
    for (len, what) in [(z.n(), "sign vector length"), (d.len(), "weight length")] {
        if len != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                found: len,
            });
        }
    }
    for (index, &value) in d.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::PreconditionerNotPositive { index, value });
        }
    }
    let r = y.r();
    let twisted = DMatrix::from_fn(n, r, |i, k| z.entries()[i].conjugate() * y.rows()[(i, k)]);
    let trace_d: f64 = d.iter().sum();
    let mut weighted = DVector::<T>::zeros(r);
    for i in 0..n {
        let w = T::from_parts(d[i], 0.0);
        for k in 0..r {
            weighted[k] += w * twisted[(i, k)];
        }
    }
    let norm = weighted.norm();
    let rho = (norm / trace_d).min(1.0);
    let degenerate = norm == 0.0;
    let direction = if degenerate {
        let mut e = DVector::zeros(r);
        e[0] = T::one();
        e
    } else {
        weighted.unscale(norm)
    };
    let rho_t = T::from_parts(rho, 0.0);
    let mut weighted_residual = 0.0;
    for i in 0..n {
        let row: f64 = (0..r)
            .map(|k| (twisted[(i, k)] - rho_t * direction[k]).modulus_squared())
            .sum();
        weighted_residual += d[i] * row;
    }
    Ok(Alignment {
        rho,
        direction,
        degenerate,
        weighted_residual,
        trace_d,
    })
}

/// Largest entrywise gap `max |(Y Y^*)_ij - z_i conj(z_j)|`.
pub fn recovery_gap<T: Scalar>(y: &SphereConfig<T>, z: &SignVector<T>) -> Result<f64> {
    if z.n() != y.n() {
        return Err(Error::DimensionMismatch {
            what: "sign vector length",
            expected: y.n(),
            found: z.n(),
        });
    }
    let rows = y.rows();
    let zs = z.entries();
    let mut worst = 0.0_f64;
    for i in 0..y.n() {
        for j in i..y.n() {
            let mut g = T::zero();
            for k in 0..y.r() {
                g += rows[(i, k)] * rows[(j, k)].conjugate();
            }
            worst = worst.max((g - zs[i] * zs[j].conjugate()).modulus());
        }
    }
    Ok(worst)
}

/// True iff `Y Y^*` matches `z z^*` entrywise within `tol`.
pub fn recovery_check<T: Scalar>(y: &SphereConfig<T>, z: &SignVector<T>, tol: f64) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("recovery tolerance must be positive, got {tol}")));
    }
    Ok(recovery_gap(y, z)? <= tol)
}
