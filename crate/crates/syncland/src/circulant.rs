//! Closed-form spectra of the k-nearest-neighbour ring `C_n(1..k)`.
//!
//! Node `i` is joined to `i +- 1, ..., i +- k` modulo `n`. The adjacency,
//! Laplacian and twisted-state linearization are all circulant, so their
//! eigenvalues are DFT coefficients indexed by `m`, symmetric under
//! `m -> n - m`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

use crate::certificates::extended_float;
use crate::error::{Error, Result};

fn check(n: usize, k: usize) -> Result<()> {
    if k == 0 || n < 2 * k + 1 {
        return Err(Error::InvalidParameter(format!("need k >= 1 and n >= 2k + 1, got n = {n}, k = {k}")));
    }
    Ok(())
}

/// `sin((2k+1) pi m / n) / sin(pi m / n)`, with the value `2k + 1` at
/// `m = 0 mod n`.
pub fn dirichlet_ratio(n: usize, k: usize, m: i64) -> f64 {
    let m = m.rem_euclid(n as i64);
    if m == 0 {
        return (2 * k + 1) as f64;
    }
    let x = PI * m as f64 / n as f64;
    ((2 * k + 1) as f64 * x).sin() / x.sin()
}

/// Laplacian eigenvalue `H_L[m] = 2k + 1 - sin((2k+1) pi m / n) / sin(pi m / n)`.
pub fn laplacian_coefficient(n: usize, k: usize, m: i64) -> f64 {
    (2 * k + 1) as f64 - dirichlet_ratio(n, k, m)
}

/// Eigenvalue of the linearization at the first twisted state,
/// `-H_L[1] + (H_L[m-1] + H_L[m+1]) / 2`.
pub fn twisted_coefficient(n: usize, k: usize, m: i64) -> f64 {
    -laplacian_coefficient(n, k, 1) + 0.5 * (laplacian_coefficient(n, k, m - 1) + laplacian_coefficient(n, k, m + 1))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CirculantSpectrum {
    pub n: usize,
    pub k: usize,
    /// Indexed by `m = 0..=n/2`.
    pub h_a: Vec<f64>,
    pub h_l: Vec<f64>,
    pub h_ltilde: Vec<f64>,
    /// `max H_L[m] / min H_L[m]` over `1 <= m <= n/2`.
    #[serde(with = "extended_float")]
    pub condition_number: f64,
    /// `min H_Ltilde[m]` over `1 <= m <= n/2`.
    pub lambda2_twisted: f64,
}

impl CirculantSpectrum {
    /// Full multiset `{H_L[m] : 0 <= m < n}`.
    pub fn laplacian_eigenvalues(&self) -> Vec<f64> {
        (0..self.n as i64).map(|m| laplacian_coefficient(self.n, self.k, m)).collect()
    }

    pub fn twisted_eigenvalues(&self) -> Vec<f64> {
        (0..self.n as i64).map(|m| twisted_coefficient(self.n, self.k, m)).collect()
    }

    pub fn adjacency_eigenvalues(&self) -> Vec<f64> {
        (0..self.n as i64).map(|m| dirichlet_ratio(self.n, self.k, m) - 1.0).collect()
    }
}

pub fn dft_spectrum(n: usize, k: usize) -> Result<CirculantSpectrum> {
    check(n, k)?;
    let half = n / 2;
    let h_a: Vec<f64> = (0..=half as i64)
        .map(|m| if m == 0 { (2 * k) as f64 } else { dirichlet_ratio(n, k, m) - 1.0 })
        .collect();
    let h_l: Vec<f64> = h_a.iter().map(|a| h_a[0] - a).collect();
    let h_ltilde: Vec<f64> = (0..=half as i64).map(|m| twisted_coefficient(n, k, m)).collect();
    let (lo, hi) = h_l[1..]
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let condition_number = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let lambda2_twisted = h_ltilde[1..].iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CirculantSpectrum {
        n,
        k,
        h_a,
        h_l,
        h_ltilde,
        condition_number,
        lambda2_twisted,
    })
}

/// `Hbar_{L,mu}[m] = mu - sin(pi mu m) / (pi m)`, the limit of `H_L[m] / n`
/// at density `2k / n -> mu`.
pub fn limit_laplacian(mu: f64, m: u32) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let x = PI * m as f64;
    mu - (x * mu).sin() / x
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityLimit {
    pub mu: f64,
    pub kappa: f64,
}

impl DensityLimit {
    pub fn new(mu: f64) -> Result<Self> {
        Ok(DensityLimit {
            mu,
            kappa: limit_kappa(mu)?,
        })
    }

    pub fn hbar_l(&self, m: u32) -> f64 {
        limit_laplacian(self.mu, m)
    }
}

/// `kappa(mu) = Hbar_{L,mu}[2] / Hbar_{L,mu}[1]`.
pub fn limit_kappa(mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidParameter(format!("density must lie in (0, 1], got {mu}")));
    }
    Ok(limit_laplacian(mu, 2) / limit_laplacian(mu, 1))
}

/// `2 (1 - sin(pi mu)/(pi mu)) - (1 - sin(2 pi mu)/(2 pi mu))`, which is
/// `(2 Hbar[1] - Hbar[2]) / mu`.
pub fn critical_density_residual(mu: f64) -> f64 {
    let x = PI * mu;
    2.0 * (1.0 - x.sin() / x) - (1.0 - (2.0 * x).sin() / (2.0 * x))
}

/// The density `mu_c` in `[0.6, 1]` where `kappa(mu_c) = 2`, by bisection to
/// `1e-12`. Computed once per process.
pub fn critical_density() -> f64 {
    static MU_C: OnceLock<f64> = OnceLock::new();
    *MU_C.get_or_init(|| {
        let (mut lo, mut hi) = (0.6_f64, 1.0_f64);
        debug_assert!(critical_density_residual(lo) < 0.0 && critical_density_residual(hi) > 0.0);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if critical_density_residual(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StabilityRecord {
    pub n: usize,
    pub k: usize,
    #[serde(with = "extended_float")]
    pub condition_number: f64,
    /// Smallest nonzero-mode eigenvalue of the twisted-state linearization.
    pub lambda2_twisted: f64,
    /// `H_Ltilde[1] = -H_L[1] + H_L[2] / 2`.
    pub h_ltilde_1: f64,
    /// The first twisted state is a stable equilibrium.
    pub predicts_spurious: bool,
    pub condition_exceeds_two: bool,
}

pub fn finite_size_stability(n: usize, k: usize) -> Result<StabilityRecord> {
    let spec = dft_spectrum(n, k)?;
    let zero = 1e-9 * (2 * k + 1) as f64;
    Ok(StabilityRecord {
        n,
        k,
        condition_number: spec.condition_number,
        lambda2_twisted: spec.lambda2_twisted,
        h_ltilde_1: spec.h_ltilde[1],
        predicts_spurious: spec.lambda2_twisted > zero,
        condition_exceeds_two: spec.condition_number > 2.0,
    })
}
