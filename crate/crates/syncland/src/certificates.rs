//! Spectral certificates for the rank-one optimum `z z^*`.
//!
//! [`certify_sdp_optimality`] checks that `L(z)` is a valid dual certificate
//! for the max-cut SDP and reports its spectral gap. [`benign_landscape_check`]
//! and its complex sibling compare the preconditioned condition number
//! `lambda_n(L_D) / lambda_2(L_D)` with the relaxation rank: when
//! `r > lambda_n / lambda_2` (real) or `2r > lambda_n / lambda_2` (complex),
//! every second-order critical point of the rank-`r` problem satisfies
//! `Y Y^* = z z^*`.
//!
//! The implication only runs one way. A failed check is reported as
//! [`Verdict::Inconclusive`] or [`Verdict::PsdCertifiedOnly`], never as a
//! claim that spurious critical points exist.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{degree_imaginary_parts, degree_vector, laplacian, Laplacian, SignVector, SymmetricCost};
use crate::scalar::{Complex64, Scalar};

/// Relative tolerance used for dual feasibility and for deciding that an
/// eigenvalue is zero.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Every second-order critical point at this rank is a global optimum.
    BenignForR,
    /// `z z^*` is the unique SDP optimum, but the condition number is too
    /// large to say anything about the landscape at this rank.
    PsdCertifiedOnly,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerKind {
    Identity,
    Degree,
    Custom,
}

/// Which diagonal `D` to use in `D^{-1/2} L(z) D^{-1/2}`.
#[derive(Clone, Debug, PartialEq)]
pub enum PreconditionerChoice {
    Identity,
    /// `D = ddiag(C z z^T)`; turns a graph Laplacian into the normalized one.
    Degree,
    Custom(Vec<f64>),
}

impl PreconditionerChoice {
    pub fn kind(&self) -> PreconditionerKind {
        match self {
            PreconditionerChoice::Identity => PreconditionerKind::Identity,
            PreconditionerChoice::Degree => PreconditionerKind::Degree,
            PreconditionerChoice::Custom(_) => PreconditionerKind::Custom,
        }
    }
}

pub(crate) mod extended_float {
    //! Infinite values serialize as the strings `"inf"` / `"-inf"`, NaN as null.
    use serde::Serializer;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_none()
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub mod option {
        use serde::Serializer;

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match x {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }
    }
}

/// Eigenvalues, condition number and verdict for one (preconditioned)
/// certificate matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub lambda_n: f64,
    #[serde(with = "extended_float")]
    pub condition_number: f64,
    /// Relaxation rank the verdict refers to, when one was given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    /// The computed ratio `lambda_n / lambda_2` the rank is compared against
    /// (`2r` against it in the complex case).
    #[serde(with = "extended_float")]
    pub r_required: f64,
    pub verdict: Verdict,
    pub dual_feasible: bool,
    pub preconditioner: PreconditionerKind,
    #[serde(skip_serializing_if = "Option::is_none", with = "extended_float::option")]
    pub delta_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl CertificateReport {
    pub fn is_benign(&self) -> bool {
        self.verdict == Verdict::BenignForR
    }
}

/// Sorted eigenvalues of a certificate matrix.
pub fn spectrum<T: Scalar>(l: &Laplacian<T>) -> Result<Vec<f64>> {
    l.spectrum()
}

/// Eigenvalues below `DEFAULT_TOL * max(1, ||L||)` in magnitude count as zero.
pub fn zero_threshold(norm: f64, tol: f64) -> f64 {
    tol * norm.max(1.0)
}

struct Extremes {
    lambda_1: f64,
    lambda_2: f64,
    lambda_n: f64,
    norm: f64,
}

fn extremes(values: &[f64]) -> Extremes {
    let n = values.len();
    let lambda_1 = values[0];
    let lambda_n = values[n - 1];
    Extremes {
        lambda_1,
        lambda_2: values[1],
        lambda_n,
        norm: lambda_1.abs().max(lambda_n.abs()),
    }
}

/// `L(z) z = 0` within `tol * ||L|| * sqrt(n)`.
fn annihilates<T: Scalar>(l: &Laplacian<T>, z: &SignVector<T>, norm: f64, tol: f64) -> bool {
    let residual = (l.entries() * z.entries()).norm();
    residual <= tol * norm * (z.n() as f64).sqrt()
}

/// Shared implementation of the real and complex landscape checks.
///
/// `rank_factor` is 1 for real problems and 2 for complex ones. Positive
/// semidefiniteness is tested on the matrix whose spectrum is reported; it is
/// invariant under the congruence `D^{-1/2} . D^{-1/2}`.
pub fn landscape_check<T: Scalar>(
    c: &SymmetricCost<T>,
    z: &SignVector<T>,
    r: Option<usize>,
    choice: &PreconditionerChoice,
    tol: f64,
) -> Result<CertificateReport> {
    if c.n() != z.n() {
        return Err(Error::DimensionMismatch {
            what: "sign vector length",
            expected: c.n(),
            found: z.n(),
        });
    }
    if c.n() < 2 {
        return Err(Error::InvalidParameter("certificates need n >= 2".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let rank_factor = if T::IS_COMPLEX { 2.0 } else { 1.0 };
    let l = laplacian(c, z)?;
    let kind = choice.kind();
    let mut reason = None;

    let preconditioned = match choice {
        PreconditionerChoice::Identity => Some(l.clone()),
        PreconditionerChoice::Custom(d) => Some(l.precondition(d)?),
        PreconditionerChoice::Degree => {
            let d = degree_vector(c, z)?;
            match d.iter().position(|&x| !(x > 0.0)) {
                Some(i) => {
                    reason = Some(format!("degree preconditioner not positive: entry {i} is {}", d[i]));
                    None
                }
                None => Some(l.precondition(&d)?),
            }
        }
    };

    let Some(ld) = preconditioned else {
        // Fall back to the plain spectrum so the report still carries numbers.
        let e = extremes(&l.spectrum()?);
        let feasible = e.lambda_1 >= -tol * e.norm && annihilates(&l, z, e.norm, tol);
        return Ok(CertificateReport {
            lambda_1: e.lambda_1,
            lambda_2: e.lambda_2,
            lambda_n: e.lambda_n,
            condition_number: f64::INFINITY,
            r,
            r_required: f64::INFINITY,
            verdict: Verdict::Inconclusive,
            dual_feasible: feasible,
            preconditioner: kind,
            delta_c: None,
            reason,
        });
    };

    let e = extremes(&ld.spectrum()?);
    let l_norm = if matches!(choice, PreconditionerChoice::Identity) {
        e.norm
    } else {
        row_sum_norm(&l)
    };
    let mut dual_feasible = e.lambda_1 >= -tol * e.norm && annihilates(&l, z, l_norm, tol);
    if T::IS_COMPLEX {
        let worst = degree_imaginary_parts(c, z)
            .into_iter()
            .fold(0.0_f64, |m, x| m.max(x.abs()));
        if worst > tol * l_norm.max(1.0) {
            dual_feasible = false;
            reason = Some(format!("gradient condition fails: Im diag(C z z*) reaches {worst:e}"));
        }
    }
    let threshold = zero_threshold(e.norm, tol);
    let has_gap = e.lambda_2 > threshold;
    let condition_number = if has_gap {
        e.lambda_n / e.lambda_2
    } else {
        f64::INFINITY
    };
    let verdict = if !dual_feasible {
        if reason.is_none() {
            reason = Some("L(z) is not positive semidefinite with L(z) z = 0".into());
        }
        Verdict::Inconclusive
    } else if !has_gap {
        reason = Some("spectral gap lambda_2 vanishes".into());
        Verdict::Inconclusive
    } else {
        match r {
            Some(r) if rank_factor * r as f64 > condition_number => Verdict::BenignForR,
            _ => Verdict::PsdCertifiedOnly,
        }
    };
    Ok(CertificateReport {
        lambda_1: e.lambda_1,
        lambda_2: e.lambda_2,
        lambda_n: e.lambda_n,
        condition_number,
        r,
        r_required: condition_number,
        verdict,
        dual_feasible,
        preconditioner: kind,
        delta_c: None,
        reason,
    })
}

/// Row-sum bound on `||L||`, enough to scale the `L z = 0` residual test.
fn row_sum_norm<T: Scalar>(l: &Laplacian<T>) -> f64 {
    let m = l.entries();
    (0..l.n())
        .map(|i| m.row(i).iter().map(|x| x.modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Checks that `L(z) = ddiag(C z z^*) - C` certifies `z z^*` as an optimum of
/// the SDP relaxation, and reports the spectral gap that makes it unique.
pub fn certify_sdp_optimality<T: Scalar>(c: &SymmetricCost<T>, z: &SignVector<T>, tol: f64) -> Result<CertificateReport> {
    landscape_check(c, z, None, &PreconditionerChoice::Identity, tol)
}

/// Real-case landscape check at relaxation rank `r >= 2`.
pub fn benign_landscape_check(
    c: &SymmetricCost<f64>,
    z: &SignVector<f64>,
    r: usize,
    choice: &PreconditionerChoice,
) -> Result<CertificateReport> {
    if r < 2 {
        return Err(Error::InvalidParameter(format!("relaxation rank must be at least 2, got {r}")));
    }
    landscape_check(c, z, Some(r), choice, DEFAULT_TOL)
}

/// Hermitian landscape check at complex rank `r >= 1` (benign when
/// `2r > lambda_n / lambda_2`).
pub fn benign_landscape_check_complex(
    c: &SymmetricCost<Complex64>,
    z: &SignVector<Complex64>,
    r: usize,
    choice: &PreconditionerChoice,
) -> Result<CertificateReport> {
    if r < 1 {
        return Err(Error::InvalidParameter("relaxation rank must be at least 1".into()));
    }
    landscape_check(c, z, Some(r), choice, DEFAULT_TOL)
}

/// Rank-one reference `C_bar = diag(z) a a^T diag(z)` used to bound the
/// normalized condition number.
#[derive(Clone, Debug, PartialEq)]
pub enum ReferenceProfile {
    Vector(Vec<f64>),
    /// `a = sqrt(d_bar / n) 1`, so `C_bar = (d_bar / n) z z^T`.
    Uniform(f64),
}

/// Spectral comparison of `L_D` (with `D = ddiag(C z z^T)`) against the
/// normalized Laplacian of a rank-one reference.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankOneReference {
    #[serde(skip)]
    pub a: Vec<f64>,
    #[serde(skip)]
    pub z: SignVector<f64>,
    pub kappa_d: f64,
    #[serde(with = "extended_float")]
    pub delta_c: f64,
    pub d_min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_bar: Option<f64>,
    #[serde(with = "extended_float")]
    pub bound_on_condition_number: f64,
    /// `|| L_D - L_bar ||_op`, computed directly.
    #[serde(with = "extended_float::option")]
    pub measured_deviation: Option<f64>,
    /// `lambda_n(L_D) / lambda_2(L_D)`.
    #[serde(with = "extended_float::option")]
    pub measured_condition_number: Option<f64>,
    /// False when `d_min <= 0` and the bound does not apply.
    pub applicable: bool,
}

/// `(1 + delta) / (1 - delta)` below 1, infinite otherwise.
pub fn condition_bound(delta_c: f64) -> f64 {
    if delta_c < 1.0 {
        (1.0 + delta_c) / (1.0 - delta_c)
    } else {
        f64::INFINITY
    }
}

pub fn rank_one_bound(c: &SymmetricCost<f64>, z: &SignVector<f64>, profile: &ReferenceProfile) -> Result<RankOneReference> {
    let n = c.n();
    if z.n() != n {
        return Err(Error::DimensionMismatch {
            what: "sign vector length",
            expected: n,
            found: z.n(),
        });
    }
    let (a, d_bar) = match profile {
        ReferenceProfile::Vector(a) => {
            if a.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "reference vector length",
                    expected: n,
                    found: a.len(),
                });
            }
            (a.clone(), None)
        }
        ReferenceProfile::Uniform(d_bar) => (vec![(d_bar / n as f64).sqrt(); n], Some(*d_bar)),
    };
    if let Some(i) = a.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidParameter(format!("reference vector must be positive (entry {i} is {})", a[i])));
    }

    // Work in the gauge z = 1: C' = diag(z) C diag(z).
    let gauged = c.conjugated_by(z)?;
    let cg = gauged.entries();
    let d = degree_vector(&gauged, &SignVector::ones(n))?;
    let d_min = d.iter().copied().fold(f64::INFINITY, f64::min);
    let a1: f64 = a.iter().sum();
    let d_ref: Vec<f64> = a.iter().map(|ai| a1 * ai).collect();

    if !(d_min > 0.0) {
        return Ok(RankOneReference {
            a,
            z: z.clone(),
            kappa_d: f64::INFINITY,
            delta_c: f64::INFINITY,
            d_min,
            d_bar,
            bound_on_condition_number: f64::INFINITY,
            measured_deviation: None,
            measured_condition_number: None,
            applicable: false,
        });
    }

    let kappa_d = d_ref
        .iter()
        .zip(&d)
        .map(|(r, di)| r / di)
        .fold(1.0_f64, f64::max);
    let scaled_gap = DMatrix::from_fn(n, n, |i, j| (cg[(i, j)] - a[i] * a[j]) / (d_ref[i] * d_ref[j]).sqrt());
    let delta_c = 2.0 * kappa_d * kappa_d * linalg::hermitian_norm(&scaled_gap)?;

    let identity = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let l_d = DMatrix::from_fn(n, n, |i, j| identity(i, j) - cg[(i, j)] / (d[i] * d[j]).sqrt());
    let l_ref = DMatrix::from_fn(n, n, |i, j| identity(i, j) - a[i] * a[j] / (d_ref[i] * d_ref[j]).sqrt());
    let measured_deviation = linalg::hermitian_norm(&(&l_d - l_ref))?;
    let values = linalg::symmetric_eigenvalues(&l_d)?;
    let measured_condition_number = values[n - 1] / values[1];

    Ok(RankOneReference {
        a,
        z: z.clone(),
        kappa_d,
        delta_c,
        d_min,
        d_bar,
        bound_on_condition_number: condition_bound(delta_c),
        measured_deviation: Some(measured_deviation),
        measured_condition_number: Some(measured_condition_number),
        applicable: true,
    })
}

/// Both Laplacian certificates for a Kuramoto coupling matrix `A`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SyncCertificate {
    /// `L = diag(A 1) - A`.
    pub ordinary: CertificateReport,
    /// `I - D^{-1/2} A D^{-1/2}`; absent when `A 1` has a nonpositive entry.
    pub normalized: Option<CertificateReport>,
    /// Either ratio is below 2.
    pub synchronizing: bool,
}

impl SyncCertificate {
    pub fn verdict(&self) -> Verdict {
        if self.synchronizing {
            Verdict::BenignForR
        } else if self.ordinary.verdict == Verdict::PsdCertifiedOnly
            || self.normalized.as_ref().is_some_and(|n| n.verdict == Verdict::PsdCertifiedOnly)
        {
            Verdict::PsdCertifiedOnly
        } else {
            Verdict::Inconclusive
        }
    }

    /// The smaller of the two condition numbers.
    pub fn best_condition_number(&self) -> f64 {
        let normalized = self.normalized.as_ref().map_or(f64::INFINITY, |n| n.condition_number);
        self.ordinary.condition_number.min(normalized)
    }
}

/// Global synchronization test for the homogeneous Kuramoto network with
/// coupling `A`: the `r = 2`, `z = 1` landscape check under the identity
/// and degree preconditioners.
pub fn kuramoto_sync_check(a: &SymmetricCost<f64>) -> Result<SyncCertificate> {
    let z = SignVector::ones(a.n());
    let ordinary = benign_landscape_check(a, &z, 2, &PreconditionerChoice::Identity)?;
    let degrees = degree_vector(a, &z)?;
    let normalized = if degrees.iter().all(|&d| d > 0.0) {
        Some(benign_landscape_check(a, &z, 2, &PreconditionerChoice::Degree)?)
    } else {
        None
    };
    let synchronizing = ordinary.is_benign() || normalized.as_ref().is_some_and(CertificateReport::is_benign);
    Ok(SyncCertificate {
        ordinary,
        normalized,
        synchronizing,
    })
}

/// Expansion parameter `|| A - (d/n) 1 1^T ||_op / d`.
pub fn expander_alpha(a: &SymmetricCost<f64>, d: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidParameter(format!("degree must be positive, got {d}")));
    }
    let n = a.n();
    let shift = d / n as f64;
    let centered = a.entries().map(|x| x - shift);
    Ok(linalg::hermitian_norm(&centered)? / d)
}
