//! Riemannian gradient ascent on the product of spheres.
//!
//! [`solve`] alternates [`ascend`] with a curvature probe
//! ([`min_curvature_direction`]) and, when the probe finds a direction of
//! negative curvature, kicks the iterate along it and ascends again.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::certificates::extended_float;
use crate::error::{Error, Result};
use crate::linalg;
use crate::manifold::{alignment, project_unchecked, recovery_check, retract};
use crate::problem::{certificate_matrix, cost_times, objective_from_product, SignVector, SphereConfig, SymmetricCost};
use crate::rng::{derive_seed, rng_from_seed, stream, ModelRng};
use crate::scalar::{frobenius_dot, Scalar};

/// Curvature is computed exactly from a dense tangent Hessian up to this many
/// real tangent coordinates.
pub const DENSE_HESSIAN_LIMIT: usize = 600;

/// Recovery tolerance used by [`solve`] when a ground truth is supplied.
pub const RECOVERY_TOL: f64 = 1e-6;

const MAX_SHRINKS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum StepRule {
    /// Constant step, in units of `1 / ||C||_op`.
    Fixed { step: f64 },
    /// Armijo backtracking from `1 / (2 ||C||_op)`.
    Backtracking { shrink: f64, sufficient_increase: f64 },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Backtracking {
            shrink: 0.5,
            sufficient_increase: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveOptions {
    pub max_iters: usize,
    /// Stationarity threshold on the RMS row gradient, relative to `||C||_op`.
    pub grad_tol: f64,
    /// Second-order threshold, relative to `||C||_op`.
    pub curvature_tol: f64,
    pub step_rule: StepRule,
    pub hessian_probe_iters: usize,
    pub escape_attempts: usize,
    pub escape_radius: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 10_000,
            grad_tol: 1e-8,
            curvature_tol: 1e-7,
            step_rule: StepRule::default(),
            hessian_probe_iters: 200,
            escape_attempts: 5,
            escape_radius: 1e-3,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grad_tol", self.grad_tol),
            ("curvature_tol", self.curvature_tol),
            ("escape_radius", self.escape_radius),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")));
            }
        }
        if self.hessian_probe_iters == 0 {
            return Err(Error::InvalidParameter("hessian_probe_iters must be at least 1".into()));
        }
        match self.step_rule {
            StepRule::Fixed { step } if !(step > 0.0 && step.is_finite()) => {
                Err(Error::InvalidParameter(format!("fixed step must be positive, got {step}")))
            }
            StepRule::Backtracking {
                shrink,
                sufficient_increase,
            } if !(shrink > 0.0 && shrink < 1.0) || !(sufficient_increase > 0.0 && sufficient_increase < 1.0) => {
                Err(Error::InvalidParameter(format!(
                    "backtracking needs shrink and sufficient_increase in (0, 1), got {shrink} and {sufficient_increase}"
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Gradient below tolerance.
    Converged,
    /// `max_iters` reached first.
    NotConverged,
    /// No step size gave an increase; the gradient is at the rounding floor.
    Stalled,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport<T: Scalar = f64> {
    #[serde(skip)]
    pub final_y: SphereConfig<T>,
    pub objective: f64,
    /// `||S(Y) Y||_F / sqrt(n)`.
    pub grad_norm: f64,
    #[serde(with = "extended_float")]
    pub min_hessian_curvature: f64,
    #[serde(with = "extended_float::option")]
    pub rho: Option<f64>,
    pub second_order_critical: bool,
    pub recovered: Option<bool>,
    pub iterations: usize,
    pub escapes_used: usize,
    pub status: SolveStatus,
    /// Objective after every accepted step, starting with the initial value.
    /// Increments are accumulated, so the sequence is exactly monotone.
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Rows drawn i.i.d. uniformly from the unit sphere of `R^r` (or `C^r`).
pub fn random_init<T: Scalar>(n: usize, r: usize, seed: u64) -> Result<SphereConfig<T>> {
    if r == 0 {
        return Err(Error::InvalidParameter("rank must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    random_rows(n, r, &mut rng)
}

fn gaussian_matrix<T: Scalar>(n: usize, r: usize, rng: &mut ModelRng) -> DMatrix<T> {
    DMatrix::from_fn(n, r, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = if T::IS_COMPLEX { rng.sample(StandardNormal) } else { 0.0 };
        T::from_parts(re, im)
    })
}

fn random_rows<T: Scalar>(n: usize, r: usize, rng: &mut ModelRng) -> Result<SphereConfig<T>> {
    loop {
        // A zero Gaussian row has probability zero; redraw rather than fail.
        if let Ok(y) = SphereConfig::normalize(gaussian_matrix(n, r, rng)) {
            return Ok(y);
        }
    }
}

fn gradient_from_product<T: Scalar>(y: &DMatrix<T>, cy: &DMatrix<T>) -> DMatrix<T> {
    project_unchecked(y, cy) * T::from_parts(2.0, 0.0)
}

/// Ascent direction `2 P_T(C Y) = -2 S(Y) Y`.
pub fn riemannian_gradient<T: Scalar>(c: &SymmetricCost<T>, y: &SphereConfig<T>) -> Result<DMatrix<T>> {
    let cy = cost_times(c, y)?;
    Ok(gradient_from_product(y.rows(), &cy))
}

/// `<S(Y), V V^*>` for the tangent part of `V`. The objective along
/// `retract(Y, tV)` has second derivative `-2 <S(Y), V V^*>` at a critical
/// point.
pub fn hessian_quadratic_form<T: Scalar>(c: &SymmetricCost<T>, y: &SphereConfig<T>, v: &DMatrix<T>) -> Result<f64> {
    let v = crate::manifold::tangent_project(y, v)?;
    let s = certificate_matrix(c, y)?;
    Ok(frobenius_dot(&v, &(s.entries() * &v)))
}

fn rms_gradient<T: Scalar>(grad: &DMatrix<T>) -> f64 {
    // grad = -2 S Y
    grad.norm() / (2.0 * (grad.nrows().max(1) as f64).sqrt())
}

struct AscentOutcome<T: Scalar> {
    y: SphereConfig<T>,
    objective: f64,
    grad_norm: f64,
    iterations: usize,
    status: SolveStatus,
    history: Vec<f64>,
}

fn ascend_inner<T: Scalar>(
    c: &SymmetricCost<T>,
    y0: SphereConfig<T>,
    opts: &SolveOptions,
    c_norm: f64,
    history_start: Option<f64>,
) -> Result<AscentOutcome<T>> {
    let mut y = y0;
    let mut cy = cost_times(c, &y)?;
    let mut objective = objective_from_product(&cy, y.rows());
    let mut history = vec![history_start.unwrap_or(objective)];
    let threshold = opts.grad_tol * c_norm;
    let mut iterations = 0;
    let status = loop {
        let grad = gradient_from_product(y.rows(), &cy);
        let grad_norm = rms_gradient(&grad);
        if grad_norm <= threshold {
            break SolveStatus::Converged;
        }
        if iterations >= opts.max_iters {
            break SolveStatus::NotConverged;
        }
        let grad_sq = grad.norm_squared();
        let (mut t, shrink, armijo) = match opts.step_rule {
            StepRule::Fixed { step } => (step / c_norm, 0.0, 0.0),
            StepRule::Backtracking {
                shrink,
                sufficient_increase,
            } => (0.5 / c_norm, shrink, sufficient_increase),
        };
        let mut accepted = None;
        for _ in 0..MAX_SHRINKS {
            if let Ok(candidate) = retract(&y, &(&grad * T::from_parts(t, 0.0))) {
                let c_candidate = c.entries() * candidate.rows();
                // <C Y', Y'> - <C Y, Y> computed without cancellation.
                let increment = frobenius_dot(&(&cy + &c_candidate), &(candidate.rows() - y.rows()));
                if increment >= armijo * t * grad_sq && increment >= 0.0 {
                    accepted = Some((candidate, c_candidate, increment));
                    break;
                }
            }
            if shrink == 0.0 {
                break;
            }
            t *= shrink;
        }
        let Some((candidate, c_candidate, increment)) = accepted else {
            break SolveStatus::Stalled;
        };
        y = candidate;
        cy = c_candidate;
        objective = objective_from_product(&cy, y.rows());
        let last = *history.last().expect("history starts non-empty");
        history.push(last + increment);
        iterations += 1;
    };
    let grad_norm = rms_gradient(&gradient_from_product(y.rows(), &cy));
    Ok(AscentOutcome {
        y,
        objective,
        grad_norm,
        iterations,
        status,
        history,
    })
}

/// Plain first-order ascent from `y0`. The report's curvature is not probed
/// (`NaN`) and `second_order_critical` is false.
pub fn ascend<T: Scalar>(c: &SymmetricCost<T>, y0: &SphereConfig<T>, opts: &SolveOptions) -> Result<SolveReport<T>> {
    opts.validate()?;
    if y0.n() != c.n() {
        return Err(Error::DimensionMismatch {
            what: "configuration rows",
            expected: c.n(),
            found: y0.n(),
        });
    }
    let c_norm = c.operator_norm()?;
    let out = if c_norm == 0.0 {
        trivial_outcome(y0.clone())
    } else {
        ascend_inner(c, y0.clone(), opts, c_norm, None)?
    };
    Ok(SolveReport {
        final_y: out.y,
        objective: out.objective,
        grad_norm: out.grad_norm,
        min_hessian_curvature: f64::NAN,
        rho: None,
        second_order_critical: false,
        recovered: None,
        iterations: out.iterations,
        escapes_used: 0,
        status: out.status,
        history: out.history,
    })
}

fn trivial_outcome<T: Scalar>(y: SphereConfig<T>) -> AscentOutcome<T> {
    AscentOutcome {
        y,
        objective: 0.0,
        grad_norm: 0.0,
        iterations: 0,
        status: SolveStatus::Converged,
        history: vec![0.0],
    }
}

/// Real orthonormal basis (as `r`-vectors in `T`) of the tangent space of
/// the sphere at `y_i`.
fn row_tangent_basis<T: Scalar>(y: &DMatrix<T>, i: usize) -> Vec<DVector<T>> {
    let r = y.ncols();
    let yi: DVector<T> = y.row(i).transpose();
    let mut candidates = Vec::with_capacity(2 * r);
    for k in 0..r {
        let mut e = DVector::zeros(r);
        e[k] = T::one();
        candidates.push(e.clone());
        if T::IS_COMPLEX {
            e[k] = T::from_parts(0.0, 1.0);
            candidates.push(e);
        }
    }
    let mut basis: Vec<DVector<T>> = Vec::with_capacity(candidates.len() - 1);
    let mut fixed = vec![yi];
    for mut v in candidates {
        for b in &fixed {
            let coef = re_inner(b, &v);
            v -= b * T::from_parts(coef, 0.0);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v.unscale_mut(norm);
            // Second pass keeps the basis orthonormal to working precision.
            for b in &fixed {
                let coef = re_inner(b, &v);
                v -= b * T::from_parts(coef, 0.0);
            }
            let norm = v.norm();
            v.unscale_mut(norm);
            fixed.push(v.clone());
            basis.push(v);
        }
    }
    basis
}

fn re_inner<T: Scalar>(a: &DVector<T>, b: &DVector<T>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conjugate() * *y).re()).sum()
}

/// Generators `Y Omega` of the rotation orbit, `Omega` skew-symmetric (real)
/// or skew-Hermitian (complex). Along these directions every critical point
/// has zero curvature.
fn orbit_generators<T: Scalar>(y: &DMatrix<T>) -> Vec<DMatrix<T>> {
    let r = y.ncols();
    let mut out = Vec::new();
    for a in 0..r {
        for b in a..r {
            if a != b {
                let mut omega = DMatrix::<T>::zeros(r, r);
                omega[(a, b)] = T::one();
                omega[(b, a)] = -T::one();
                out.push(y * omega);
            }
            if T::IS_COMPLEX {
                let mut omega = DMatrix::<T>::zeros(r, r);
                omega[(a, b)] = T::from_parts(0.0, 1.0);
                omega[(b, a)] = T::from_parts(0.0, 1.0);
                out.push(y * omega);
            }
        }
    }
    out
}

/// Gram-Schmidt in the real Frobenius inner product, dropping dependent inputs.
fn orthonormalize<T: Scalar>(mats: Vec<DMatrix<T>>) -> Vec<DMatrix<T>> {
    let mut out: Vec<DMatrix<T>> = Vec::new();
    for mut m in mats {
        let scale = m.norm();
        if scale == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &out {
                let coef = frobenius_dot(q, &m);
                m -= q * T::from_parts(coef, 0.0);
            }
        }
        let norm = m.norm();
        if norm > 1e-9 * scale {
            m.unscale_mut(norm);
            out.push(m);
        }
    }
    out
}

/// Smallest Rayleigh quotient `<S(Y), V V^*> / ||V||_F^2` over tangent
/// directions orthogonal to the rotation orbit of `Y`, with its direction
/// (unit Frobenius norm).
///
/// Exact from a dense Hessian when the tangent space has at most
/// [`DENSE_HESSIAN_LIMIT`] real dimensions; otherwise `iters` steps of power
/// iteration on `c I - H` with `c` bounding the spectrum of `S(Y)`.
pub fn min_curvature_direction<T: Scalar>(
    c: &SymmetricCost<T>,
    y: &SphereConfig<T>,
    iters: usize,
    seed: u64,
) -> Result<(f64, DMatrix<T>)> {
    if iters == 0 {
        return Err(Error::InvalidParameter("iters must be at least 1".into()));
    }
    let s = certificate_matrix(c, y)?;
    let per_row = if T::IS_COMPLEX { 2 * y.r() - 1 } else { y.r() - 1 };
    let dim = y.n() * per_row;
    if dim == 0 {
        return Ok((f64::INFINITY, DMatrix::zeros(y.n(), y.r())));
    }
    let orbit = orthonormalize(orbit_generators(y.rows()));
    if dim <= DENSE_HESSIAN_LIMIT {
        dense_min_curvature(s.entries(), y.rows(), &orbit)
    } else {
        let c_norm = c.operator_norm()?;
        let shift = c_norm + (0..y.n()).map(|i| s.entries()[(i, i)].re().abs()).fold(0.0, f64::max);
        let mut rng = rng_from_seed(derive_seed(seed, stream::PROBE, 0));
        Ok(power_min_curvature(s.entries(), y.rows(), &orbit, iters, shift, &mut rng))
    }
}

fn dense_min_curvature<T: Scalar>(s: &DMatrix<T>, y: &DMatrix<T>, orbit: &[DMatrix<T>]) -> Result<(f64, DMatrix<T>)> {
    let n = y.nrows();
    let r = y.ncols();
    let bases: Vec<Vec<DVector<T>>> = (0..n).map(|i| row_tangent_basis(y, i)).collect();
    let index: Vec<(usize, usize)> = bases
        .iter()
        .enumerate()
        .flat_map(|(i, b)| (0..b.len()).map(move |a| (i, a)))
        .collect();
    let dim = index.len();
    let mut h = DMatrix::<f64>::from_fn(dim, dim, |p, q| {
        let (i, a) = index[p];
        let (j, b) = index[q];
        let overlap = bases[i][a]
            .iter()
            .zip(bases[j][b].iter())
            .fold(T::zero(), |acc, (x, w)| acc + *x * w.conjugate());
        (s[(i, j)].conjugate() * overlap).re()
    });
    h = (&h + h.transpose()) * 0.5;

    // Orbit directions in tangent coordinates, pushed above the spectrum.
    let coords: Vec<DVector<f64>> = orbit
        .iter()
        .map(|g| {
            DVector::from_iterator(
                dim,
                index.iter().map(|&(i, a)| {
                    let gi: DVector<T> = g.row(i).transpose();
                    re_inner(&bases[i][a], &gi)
                }),
            )
        })
        .collect();
    if !coords.is_empty() {
        let q = DMatrix::from_columns(&coords);
        let p = DMatrix::<f64>::identity(dim, dim) - &q * q.transpose();
        let lift = 2.0 * h.row_iter().map(|row| row.abs().sum()).fold(0.0, f64::max) + 1.0;
        h = &p * &h * &p + &q * q.transpose() * lift;
    }
    let eig = linalg::symmetric_eigen(&h)?;
    let x = eig.vectors.column(0);
    let mut v = DMatrix::<T>::zeros(n, r);
    for (p, &(i, a)) in index.iter().enumerate() {
        for k in 0..r {
            v[(i, k)] += bases[i][a][k] * T::from_parts(x[p], 0.0);
        }
    }
    let norm = v.norm();
    if norm > 0.0 {
        v.unscale_mut(norm);
    }
    Ok((eig.values[0], v))
}

fn remove_orbit<T: Scalar>(v: &mut DMatrix<T>, y: &DMatrix<T>, orbit: &[DMatrix<T>]) {
    *v = project_unchecked(y, v);
    for q in orbit {
        let coef = frobenius_dot(q, v);
        *v -= q * T::from_parts(coef, 0.0);
    }
}

fn power_min_curvature<T: Scalar>(
    s: &DMatrix<T>,
    y: &DMatrix<T>,
    orbit: &[DMatrix<T>],
    iters: usize,
    shift: f64,
    rng: &mut ModelRng,
) -> (f64, DMatrix<T>) {
    let mut v = gaussian_matrix::<T>(y.nrows(), y.ncols(), rng);
    remove_orbit(&mut v, y, orbit);
    v.unscale_mut(v.norm());
    let mut best = (f64::INFINITY, v.clone());
    for _ in 0..iters {
        let sv = s * &v;
        let rayleigh = frobenius_dot(&v, &sv);
        if rayleigh < best.0 {
            best = (rayleigh, v.clone());
        }
        let mut next = &v * T::from_parts(shift, 0.0) - sv;
        remove_orbit(&mut next, y, orbit);
        let norm = next.norm();
        if norm == 0.0 {
            break;
        }
        next.unscale_mut(norm);
        v = next;
    }
    let rayleigh = frobenius_dot(&v, &(s * &v));
    if rayleigh < best.0 {
        best = (rayleigh, v);
    }
    best
}

/// Random unit tangent direction orthogonal to the rotation orbit.
fn random_tangent<T: Scalar>(y: &DMatrix<T>, rng: &mut ModelRng) -> DMatrix<T> {
    let orbit = orthonormalize(orbit_generators(y));
    let mut v = gaussian_matrix::<T>(y.nrows(), y.ncols(), rng);
    remove_orbit(&mut v, y, &orbit);
    let norm = v.norm();
    if norm > 0.0 {
        v.unscale_mut(norm);
    }
    v
}

/// Ascent from a random start at rank `r`, followed by curvature checks and
/// saddle escapes. At real rank one only criticality of the start is
/// evaluated.
pub fn solve<T: Scalar>(c: &SymmetricCost<T>, r: usize, opts: &SolveOptions, z: Option<&SignVector<T>>) -> Result<SolveReport<T>> {
    let y0 = random_init(c.n(), r, derive_seed(opts.seed, stream::INIT, 0))?;
    solve_from(c, y0, opts, z)
}

/// [`solve`] from a given starting configuration.
pub fn solve_from<T: Scalar>(
    c: &SymmetricCost<T>,
    y0: SphereConfig<T>,
    opts: &SolveOptions,
    z: Option<&SignVector<T>>,
) -> Result<SolveReport<T>> {
    opts.validate()?;
    if y0.n() != c.n() {
        return Err(Error::DimensionMismatch {
            what: "configuration rows",
            expected: c.n(),
            found: y0.n(),
        });
    }
    if let Some(z) = z {
        if z.n() != c.n() {
            return Err(Error::DimensionMismatch {
                what: "sign vector length",
                expected: c.n(),
                found: z.n(),
            });
        }
    }
    let c_norm = c.operator_norm()?;
    let ascent_possible = T::IS_COMPLEX || y0.r() >= 2;
    let curvature_floor = -opts.curvature_tol * c_norm;
    let mut rng = rng_from_seed(derive_seed(opts.seed, stream::ESCAPE, 0));

    let mut out = if c_norm == 0.0 {
        trivial_outcome(y0)
    } else if ascent_possible {
        ascend_inner(c, y0, opts, c_norm, None)?
    } else {
        AscentOutcome {
            history: Vec::new(),
            ..ascend_inner(c, y0, &SolveOptions { max_iters: 0, ..opts.clone() }, c_norm, None)?
        }
    };
    let mut iterations = out.iterations;
    let mut history = std::mem::take(&mut out.history);
    let mut escapes_used = 0;
    let mut curvature;
    loop {
        let probe = min_curvature_direction(c, &out.y, opts.hessian_probe_iters, derive_seed(opts.seed, stream::PROBE, escapes_used as u64))?;
        // Zero cost: every direction is flat, avoid eigensolver noise.
        curvature = if c_norm == 0.0 { 0.0 } else { probe.0 };
        let first_order = out.status == SolveStatus::Converged || out.grad_norm <= opts.grad_tol * c_norm;
        if !first_order || curvature >= curvature_floor || !ascent_possible || escapes_used >= opts.escape_attempts {
            break;
        }
        escapes_used += 1;
        let saddle_objective = out.objective;
        let scale = opts.escape_radius * (out.y.n() as f64).sqrt();
        let mut kicked = None;
        for direction in [probe.1, random_tangent(out.y.rows(), &mut rng)] {
            let Ok(start) = retract(&out.y, &(direction * T::from_parts(scale, 0.0))) else {
                continue;
            };
            let trial = ascend_inner(c, start, opts, c_norm, None)?;
            if trial.objective > saddle_objective {
                kicked = Some(trial);
                break;
            }
        }
        let Some(next) = kicked else { break };
        iterations += next.iterations;
        let gain = next.objective - saddle_objective;
        let last = history.last().copied().unwrap_or(saddle_objective);
        history.push(last + gain);
        out = next;
    }
    let grad_ok = out.grad_norm <= opts.grad_tol * c_norm;
    let second_order_critical = grad_ok && curvature >= curvature_floor;
    let (rho, recovered) = match z {
        Some(z) => {
            let d = vec![1.0; z.n()];
            let rho = alignment(&out.y, z, &d)?.rho;
            (Some(rho), Some(recovery_check(&out.y, z, RECOVERY_TOL)?))
        }
        None => (None, None),
    };
    let status = if grad_ok {
        SolveStatus::Converged
    } else {
        out.status
    };
    Ok(SolveReport {
        final_y: out.y,
        objective: out.objective,
        grad_norm: out.grad_norm,
        min_hessian_curvature: curvature,
        rho,
        second_order_critical,
        recovered,
        iterations,
        escapes_used,
        status,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::tests::complete_graph;
    use crate::scalar::Complex64;

    fn random_tangent_at<T: Scalar>(y: &SphereConfig<T>, seed: u64) -> DMatrix<T> {
        let mut rng = rng_from_seed(seed);
        project_unchecked(y.rows(), &gaussian_matrix(y.n(), y.r(), &mut rng))
    }

    fn random_symmetric(n: usize, seed: u64) -> SymmetricCost {
        let mut rng = rng_from_seed(seed);
        let g: DMatrix<f64> = gaussian_matrix(n, n, &mut rng);
        SymmetricCost::new((&g + g.transpose()) * 0.5).unwrap()
    }

    fn cycle_power(n: usize, k: usize) -> SymmetricCost {
        SymmetricCost::new(DMatrix::from_fn(n, n, |i, j| {
            let d = (i + n - j) % n;
            let d = d.min(n - d);
            if d >= 1 && d <= k {
                1.0
            } else {
                0.0
            }
        }))
        .unwrap()
    }

    fn twisted(n: usize) -> SphereConfig {
        SphereConfig::normalize(DMatrix::from_fn(n, 2, |i, k| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            if k == 0 {
                theta.cos()
            } else {
                theta.sin()
            }
        }))
        .unwrap()
    }

    #[test]
    fn random_init_is_reproducible_and_on_sphere() {
        let a: SphereConfig = random_init(30, 3, 5).unwrap();
        let b: SphereConfig = random_init(30, 3, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.max_norm_defect() < 1e-12);
        let signs: SphereConfig = random_init(200, 1, 9).unwrap();
        let plus = signs.rows().iter().filter(|x| **x == 1.0).count();
        assert!(signs.rows().iter().all(|x| x.abs() == 1.0));
        assert!(plus > 70 && plus < 130);
    }

    #[test]
    fn random_init_inner_products_average_zero() {
        let y: SphereConfig = random_init(20_000, 2, 1).unwrap();
        let rows = y.rows();
        let mean: f64 = (0..10_000)
            .map(|p| rows[(2 * p, 0)] * rows[(2 * p + 1, 0)] + rows[(2 * p, 1)] * rows[(2 * p + 1, 1)])
            .sum::<f64>()
            / 10_000.0;
        assert!(mean.abs() < 0.05);
    }

    #[test]
    fn gradient_is_tangent_and_matches_certificate() {
        let c = random_symmetric(15, 3);
        let y: SphereConfig = random_init(15, 3, 4).unwrap();
        let g = riemannian_gradient(&c, &y).unwrap();
        for i in 0..15 {
            let dot: f64 = (0..3).map(|k| g[(i, k)] * y.rows()[(i, k)]).sum();
            assert!(dot.abs() < 1e-12);
        }
        let s = certificate_matrix(&c, &y).unwrap();
        let other = s.entries() * y.rows() * -2.0;
        assert!((g - other).amax() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_at_rank_one_optimum() {
        let z = SignVector::from_signs(&[1.0, -1.0, -1.0, 1.0, 1.0]).unwrap();
        let c = SymmetricCost::new(z.entries() * z.entries().transpose()).unwrap();
        let v = DVector::from_vec(vec![0.6, 0.8]);
        let y = SphereConfig::rank_one(&z, &v).unwrap();
        assert!(riemannian_gradient(&c, &y).unwrap().amax() < 1e-14);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for trial in 0..50 {
            let c = random_symmetric(8, 100 + trial);
            let y: SphereConfig = random_init(8, 3, 200 + trial).unwrap();
            let v = random_tangent_at(&y, 300 + trial);
            let g = riemannian_gradient(&c, &y).unwrap();
            let expected = frobenius_dot(&g, &v);
            let t = 1e-6;
            let f = |m: &SphereConfig| crate::problem::objective(&c, m).unwrap();
            let plus = retract(&y, &(&v * t)).unwrap();
            let minus = retract(&y, &(&v * -t)).unwrap();
            let fd = (f(&plus) - f(&minus)) / (2.0 * t);
            assert!((fd - expected).abs() <= 1e-5 * expected.abs().max(1.0), "trial {trial}: {fd} vs {expected}");
        }
    }

    #[test]
    fn complex_gradient_matches_finite_differences() {
        let mut rng = rng_from_seed(11);
        let g: DMatrix<Complex64> = gaussian_matrix(6, 6, &mut rng);
        let c = SymmetricCost::new((&g + g.adjoint()) * Complex64::new(0.5, 0.0)).unwrap();
        let y: SphereConfig<Complex64> = random_init(6, 2, 12).unwrap();
        let v = random_tangent_at(&y, 13);
        let grad = riemannian_gradient(&c, &y).unwrap();
        let expected = frobenius_dot(&grad, &v);
        let t = 1e-6;
        let f = |m: &SphereConfig<Complex64>| crate::problem::objective(&c, m).unwrap();
        let plus = retract(&y, &(&v * Complex64::new(t, 0.0))).unwrap();
        let minus = retract(&y, &(&v * Complex64::new(-t, 0.0))).unwrap();
        let fd = (f(&plus) - f(&minus)) / (2.0 * t);
        assert!((fd - expected).abs() <= 1e-5 * expected.abs().max(1.0));
    }

    #[test]
    fn hessian_form_sign_matches_second_difference() {
        // Twisted state on a circulant graph is an exact critical point.
        let c = cycle_power(20, 5);
        let y = twisted(20);
        assert!(riemannian_gradient(&c, &y).unwrap().amax() < 1e-12);
        let v = random_tangent_at(&y, 7);
        let q = hessian_quadratic_form(&c, &y, &v).unwrap();
        let t = 1e-4;
        let f = |m: &SphereConfig| crate::problem::objective(&c, m).unwrap();
        let second = (f(&retract(&y, &(&v * t)).unwrap()) - 2.0 * f(&y) + f(&retract(&y, &(&v * -t)).unwrap())) / (t * t);
        assert!((second + 2.0 * q).abs() <= 1e-4 * (2.0 * q).abs().max(1.0), "{second} vs {}", -2.0 * q);
        assert_eq!(hessian_quadratic_form(&c, &y, &DMatrix::zeros(20, 2)).unwrap(), 0.0);
    }

    #[test]
    fn curvature_nonnegative_at_benign_optimum() {
        let n = 12;
        let c = complete_graph(n);
        let y = SphereConfig::rank_one(&SignVector::ones(n), &DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        let (curv, _) = min_curvature_direction(&c, &y, 50, 1).unwrap();
        assert!(curv >= -1e-8 * n as f64);
        for seed in 0..5 {
            let v = random_tangent_at(&y, seed);
            assert!(hessian_quadratic_form(&c, &y, &v).unwrap() >= -1e-9);
        }
    }

    #[test]
    fn twisted_state_curvature_sign() {
        // 2k/n = 0.5: stable; 2k/n = 0.8: unstable.
        let (stable, _) = min_curvature_direction(&cycle_power(40, 10), &twisted(40), 50, 0).unwrap();
        assert!(stable > 0.0, "{stable}");
        let (unstable, v) = min_curvature_direction(&cycle_power(40, 16), &twisted(40), 50, 0).unwrap();
        assert!(unstable < 0.0, "{unstable}");
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_agrees_with_dense_probe() {
        let c = cycle_power(40, 16);
        let y = twisted(40);
        let s = certificate_matrix(&c, &y).unwrap();
        let orbit = orthonormalize(orbit_generators(y.rows()));
        let (dense, _) = dense_min_curvature(s.entries(), y.rows(), &orbit).unwrap();
        let mut rng = rng_from_seed(4);
        let shift = c.operator_norm().unwrap() + 40.0;
        let (power, v) = power_min_curvature(s.entries(), y.rows(), &orbit, 3000, shift, &mut rng);
        assert!(power >= dense - 1e-9);
        assert!(power - dense < 1e-3 * shift, "{power} vs {dense}");
        let tangent_defect = (project_unchecked(y.rows(), &v) - &v).amax();
        assert!(tangent_defect < 1e-12);
    }

    #[test]
    fn ascend_is_monotone_and_stops_at_optimum() {
        let c = complete_graph(10);
        let y0: SphereConfig = random_init(10, 2, 3).unwrap();
        let rep = ascend(&c, &y0, &SolveOptions::default()).unwrap();
        assert!(rep.history.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(rep.status, SolveStatus::Converged);
        let at_opt = ascend(&c, &rep.final_y, &SolveOptions::default()).unwrap();
        assert_eq!(at_opt.iterations, 0);
    }

    #[test]
    fn ascend_reports_exhaustion() {
        let c = complete_graph(10);
        let y0: SphereConfig = random_init(10, 2, 3).unwrap();
        let opts = SolveOptions {
            max_iters: 1,
            ..SolveOptions::default()
        };
        let rep = solve_from(&c, y0, &opts, None).unwrap();
        assert_eq!(rep.status, SolveStatus::NotConverged);
        assert!(!rep.second_order_critical);
    }

    #[test]
    fn complete_graph_recovers_from_every_seed() {
        let n = 50;
        let c = complete_graph(n);
        let z = SignVector::ones(n);
        for seed in 0..20 {
            let opts = SolveOptions {
                seed,
                ..SolveOptions::default()
            };
            let rep = solve(&c, 2, &opts, Some(&z)).unwrap();
            assert!(rep.second_order_critical, "seed {seed}");
            assert_eq!(rep.recovered, Some(true), "seed {seed}");
        }
    }

    #[test]
    fn twisted_start_stays_put() {
        let c = cycle_power(40, 10);
        let rep = solve_from(&c, twisted(40), &SolveOptions::default(), Some(&SignVector::ones(40))).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(rep.second_order_critical);
        assert_eq!(rep.recovered, Some(false));
    }

    #[test]
    fn zero_cost_is_critical_everywhere() {
        let c = SymmetricCost::new(DMatrix::<f64>::zeros(6, 6)).unwrap();
        let rep = solve(&c, 3, &SolveOptions::default(), None).unwrap();
        assert_eq!(rep.objective, 0.0);
        assert!(rep.second_order_critical);
    }

    #[test]
    fn rank_one_only_checks_criticality() {
        let z = SignVector::from_signs(&[1.0, -1.0, 1.0]).unwrap();
        let c = SymmetricCost::new(z.entries() * z.entries().transpose()).unwrap();
        let rep = solve_from(&c, z.as_config(), &SolveOptions::default(), Some(&z)).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(rep.second_order_critical);
        assert_eq!(rep.recovered, Some(true));
    }

    #[test]
    fn saddle_escape_leaves_unstable_twisted_state() {
        let c = cycle_power(40, 16);
        let rep = solve_from(&c, twisted(40), &SolveOptions::default(), Some(&SignVector::ones(40))).unwrap();
        assert!(rep.escapes_used >= 1);
        assert!(rep.history.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(rep.recovered, Some(true));
    }

    #[test]
    fn invalid_options_rejected() {
        let bad = SolveOptions {
            step_rule: StepRule::Backtracking {
                shrink: 1.5,
                sufficient_increase: 1e-4,
            },
            ..SolveOptions::default()
        };
        assert!(bad.validate().is_err());
        assert!(random_init::<f64>(3, 0, 1).is_err());
    }
}
