//! The real and complex entry types every matrix in the crate is generic over.

use nalgebra::{Complex, ComplexField, DMatrix};

/// Complex entries stored as explicit `(re, im)` pairs.
pub type Complex64 = Complex<f64>;

/// Entry type of costs, configurations and Laplacians.
///
/// Implemented for `f64` (the real problem) and [`Complex64`] (the Hermitian
/// problem). Operations are written once against this trait and the
/// `IS_COMPLEX` constant selects the few places where the two cases differ.
pub trait Scalar:
    ComplexField<RealField = f64> + Copy + Send + Sync + std::fmt::Debug + 'static
{
    const IS_COMPLEX: bool;

    fn from_parts(re: f64, im: f64) -> Self;

    fn parts(self) -> (f64, f64);

    fn re(self) -> f64 {
        self.parts().0
    }

    fn im(self) -> f64 {
        self.parts().1
    }
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }

    fn parts(self) -> (f64, f64) {
        (self, 0.0)
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn from_parts(re: f64, im: f64) -> Self {
        Complex::new(re, im)
    }

    fn parts(self) -> (f64, f64) {
        (self.re, self.im)
    }
}

/// `Re <a, b>` for two equally long slices of entries.
pub(crate) fn re_dot<T: Scalar>(a: impl IntoIterator<Item = T>, b: impl IntoIterator<Item = T>) -> f64 {
    a.into_iter()
        .zip(b)
        .map(|(x, y)| (x.conjugate() * y).re())
        .sum()
}

/// Real Frobenius inner product `Re tr(A^* B)`.
pub fn frobenius_dot<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    re_dot(a.iter().copied(), b.iter().copied())
}

pub(crate) fn row_re_dot<T: Scalar>(a: &DMatrix<T>, i: usize, b: &DMatrix<T>, j: usize) -> f64 {
    (0..a.ncols())
        .map(|k| (a[(i, k)].conjugate() * b[(j, k)]).re())
        .sum()
}

pub(crate) fn row_norm<T: Scalar>(a: &DMatrix<T>, i: usize) -> f64 {
    row_re_dot(a, i, a, i).sqrt()
}
