//! Homogeneous Kuramoto networks `theta_i' = K sum_j A_ij sin(theta_j - theta_i)`.
//!
//! The flow is gradient ascent of the potential `sum_ij A_ij cos(theta_i - theta_j)`,
//! which is the rank-two objective `<A, Y Y^T>` written in angles.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{PhaseVector, SymmetricCost};
use crate::rng::rng_from_seed;

pub const DEFAULT_SYNC_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

/// Integration settings. Unset step, horizon and stall tolerance default to
/// `0.05 / (K ||A||_op)`, `5000 / (K ||A||_op)` and `1e-9 K ||A||_op`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimOptions {
    pub time_step: Option<f64>,
    pub max_time: Option<f64>,
    pub integrator: Integrator,
    pub sync_tol: f64,
    pub stall_tol: Option<f64>,
    pub seed: u64,
    /// Stop as soon as the state is synchronized instead of waiting for the
    /// velocity to stall.
    pub stop_on_sync: bool,
    /// Record every `stride`-th state.
    pub trajectory_stride: Option<usize>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            time_step: None,
            max_time: None,
            integrator: Integrator::Rk4,
            sync_tol: DEFAULT_SYNC_TOL,
            stall_tol: None,
            seed: 0,
            stop_on_sync: false,
            trajectory_stride: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Synchronized,
    StableNonsync,
    SaddleOrUnstable,
    NotConverged,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub final_angles: PhaseVector,
    pub velocity_norm: f64,
    pub synchronized: bool,
    /// `lambda_2` of the linearization Laplacian with the global shift removed.
    pub hessian_min_eig: f64,
    pub classification: Classification,
    /// Simulated time; zero for a bare classification.
    pub time: f64,
    pub steps: usize,
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

/// Sampled states `(t, theta)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// `theta_i = 2 pi q i / n`.
pub fn twisted_state(n: usize, q: i64) -> Result<PhaseVector> {
    let angles = (0..n)
        .map(|i| 2.0 * std::f64::consts::PI * (q as f64) * (i as f64) / n as f64)
        .collect();
    PhaseVector::from_angles(angles)
}

/// Independent uniform phases on `[0, 2 pi)`.
pub fn random_phases(n: usize, seed: u64) -> Result<PhaseVector> {
    let mut rng = rng_from_seed(seed);
    let angles = (0..n)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();
    PhaseVector::from_angles(angles)
}

/// `sum_ij A_ij cos(theta_i - theta_j)`.
pub fn potential(a: &SymmetricCost<f64>, theta: &[f64]) -> f64 {
    let (c, s) = trig(theta);
    c.dot(&(a.entries() * &c)) + s.dot(&(a.entries() * &s))
}

fn trig(theta: &[f64]) -> (DVector<f64>, DVector<f64>) {
    (
        DVector::from_iterator(theta.len(), theta.iter().map(|t| t.cos())),
        DVector::from_iterator(theta.len(), theta.iter().map(|t| t.sin())),
    )
}

/// Right-hand side of the flow, via `sum_j A_ij sin(theta_j - theta_i)
/// = cos(theta_i) (A sin)_i - sin(theta_i) (A cos)_i`.
pub fn phase_velocity(a: &DMatrix<f64>, theta: &[f64], coupling: f64) -> Vec<f64> {
    let (c, s) = trig(theta);
    let ac = a * &c;
    let as_ = a * &s;
    (0..theta.len())
        .map(|i| coupling * (c[i] * as_[i] - s[i] * ac[i]))
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `min_ij cos(theta_i - theta_j)` when all phases fit in an arc shorter than
/// pi; `-1` otherwise (never synchronized then).
fn min_pairwise_cos(theta: &[f64]) -> f64 {
    if theta.len() < 2 {
        return 1.0;
    }
    let mut wrapped: Vec<f64> = theta.iter().map(|t| t.rem_euclid(std::f64::consts::TAU)).collect();
    wrapped.sort_by(f64::total_cmp);
    let mut largest_gap = std::f64::consts::TAU - (wrapped[wrapped.len() - 1] - wrapped[0]);
    for w in wrapped.windows(2) {
        largest_gap = largest_gap.max(w[1] - w[0]);
    }
    let spread = std::f64::consts::TAU - largest_gap;
    if spread < std::f64::consts::PI {
        spread.cos()
    } else {
        -1.0
    }
}

pub fn is_synchronized(theta: &[f64], sync_tol: f64) -> bool {
    min_pairwise_cos(theta) >= 1.0 - sync_tol
}

fn axpy(theta: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    theta.iter().zip(k).map(|(t, v)| t + h * v).collect()
}

fn step(a: &DMatrix<f64>, theta: &[f64], k: f64, dt: f64, integrator: Integrator) -> Vec<f64> {
    match integrator {
        Integrator::Euler => axpy(theta, dt, &phase_velocity(a, theta, k)),
        Integrator::Rk4 => {
            let k1 = phase_velocity(a, theta, k);
            let k2 = phase_velocity(a, &axpy(theta, dt / 2.0, &k1), k);
            let k3 = phase_velocity(a, &axpy(theta, dt / 2.0, &k2), k);
            let k4 = phase_velocity(a, &axpy(theta, dt, &k3), k);
            (0..theta.len())
                .map(|i| theta[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect()
        }
    }
}

/// Integrates the flow from `theta0` and classifies the end state.
pub fn simulate(a: &SymmetricCost<f64>, theta0: &PhaseVector, opts: &SimOptions) -> Result<EquilibriumReport> {
    let n = a.n();
    if theta0.n() != n {
        return Err(Error::DimensionMismatch {
            what: "phase vector length",
            expected: n,
            found: theta0.n(),
        });
    }
    if !(opts.sync_tol > 0.0) {
        return Err(Error::InvalidParameter("sync_tol must be positive".into()));
    }
    let k = theta0.coupling_constant();
    let scale = k * a.operator_norm()?;
    let stall_tol = opts.stall_tol.unwrap_or(1e-9 * scale);
    let mut theta = theta0.angles().to_vec();
    let mut trajectory = opts.trajectory_stride.map(|_| Trajectory::default());
    let mut time = 0.0;
    let mut steps = 0;
    if scale > 0.0 {
        let dt = opts.time_step.unwrap_or(0.05 / scale);
        let horizon = opts.max_time.unwrap_or(5000.0 / scale);
        if !(dt > 0.0 && dt < horizon) {
            return Err(Error::InvalidParameter(format!("time step {dt} must be positive and below max_time {horizon}")));
        }
        let stride = opts.trajectory_stride.unwrap_or(usize::MAX).max(1);
        loop {
            if let Some(tr) = trajectory.as_mut() {
                if steps % stride == 0 {
                    tr.times.push(time);
                    tr.states.push(theta.clone());
                }
            }
            let velocity = norm(&phase_velocity(a.entries(), &theta, k));
            if velocity <= stall_tol || time + dt > horizon + 1e-12 * horizon {
                break;
            }
            if opts.stop_on_sync && steps % 10 == 0 && is_synchronized(&theta, opts.sync_tol) {
                break;
            }
            theta = step(a.entries(), &theta, k, dt, opts.integrator);
            time += dt;
            steps += 1;
            if theta.iter().any(|t| !t.is_finite()) {
                return Err(Error::SimulationBlowUp { time });
            }
        }
    }
    let final_angles = PhaseVector::new(theta, k)?;
    let mut report = classify_with(a, &final_angles, stall_tol, opts.sync_tol)?;
    report.time = time;
    report.steps = steps;
    report.trajectory = trajectory;
    Ok(report)
}

/// Laplacian of `A_ij cos(theta_i - theta_j)`, the negated Hessian of the
/// potential in angle coordinates (up to the factor `K`).
pub fn linearization(a: &SymmetricCost<f64>, theta: &[f64]) -> DMatrix<f64> {
    let n = a.n();
    let weighted = DMatrix::from_fn(n, n, |i, j| a.entries()[(i, j)] * (theta[i] - theta[j]).cos());
    let degrees: Vec<f64> = weighted.row_iter().map(|r| r.sum()).collect();
    DMatrix::from_fn(n, n, |i, j| if i == j { degrees[i] - weighted[(i, i)] } else { -weighted[(i, j)] })
}

/// Smallest eigenvalue of `L` off the global-shift direction `1 / sqrt(n)`.
pub fn shift_free_min_eig(l: &DMatrix<f64>) -> Result<f64> {
    let n = l.nrows();
    if n < 2 {
        return Ok(f64::INFINITY);
    }
    let eig = linalg::symmetric_eigen(l)?;
    let unit = 1.0 / (n as f64).sqrt();
    let shift_mode = (0..n)
        .filter(|&j| (eig.vectors.column(j).sum() * unit).abs() > 0.99)
        .min_by(|&x, &y| eig.values[x].abs().total_cmp(&eig.values[y].abs()));
    match shift_mode {
        Some(skip) => Ok((0..n)
            .filter(|&j| j != skip)
            .map(|j| eig.values[j])
            .fold(f64::INFINITY, f64::min)),
        None => {
            // Shift mode mixed into a degenerate eigenspace: deflate explicitly.
            let lift = 2.0 * l.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max) + 1.0;
            let deflated = l + DMatrix::from_element(n, n, lift / n as f64);
            Ok(linalg::symmetric_eigenvalues(&deflated)?[0])
        }
    }
}

/// Classifies `theta` as an equilibrium of the flow with velocity tolerance
/// `tol` and the default synchronization tolerance.
pub fn classify_equilibrium(a: &SymmetricCost<f64>, theta: &PhaseVector, tol: f64) -> Result<EquilibriumReport> {
    classify_with(a, theta, tol, DEFAULT_SYNC_TOL)
}

pub fn classify_with(a: &SymmetricCost<f64>, theta: &PhaseVector, tol: f64, sync_tol: f64) -> Result<EquilibriumReport> {
    if theta.n() != a.n() {
        return Err(Error::DimensionMismatch {
            what: "phase vector length",
            expected: a.n(),
            found: theta.n(),
        });
    }
    let angles = theta.angles();
    let velocity_norm = norm(&phase_velocity(a.entries(), angles, theta.coupling_constant()));
    let synchronized = is_synchronized(angles, sync_tol);
    let hessian_min_eig = shift_free_min_eig(&linearization(a, angles))?;
    let classification = if synchronized {
        Classification::Synchronized
    } else if velocity_norm > tol {
        Classification::NotConverged
    } else if hessian_min_eig > tol {
        Classification::StableNonsync
    } else {
        Classification::SaddleOrUnstable
    };
    Ok(EquilibriumReport {
        final_angles: theta.clone(),
        velocity_norm,
        synchronized,
        hessian_min_eig,
        classification,
        time: 0.0,
        steps: 0,
        trajectory: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::tests::complete_graph;

    fn circulant(n: usize, k: usize) -> SymmetricCost {
        SymmetricCost::new(DMatrix::from_fn(n, n, |i, j| {
            let d = (i + n - j) % n;
            if d.min(n - d) >= 1 && d.min(n - d) <= k {
                1.0
            } else {
                0.0
            }
        }))
        .unwrap()
    }

    #[test]
    fn twisted_state_values() {
        let t = twisted_state(4, 1).unwrap();
        let expected = [0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI, 1.5 * std::f64::consts::PI];
        for (a, b) in t.angles().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(twisted_state(7, 0).unwrap().angles().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn twisted_states_are_equilibria_on_circulants() {
        let a = circulant(30, 7);
        for q in 0..5 {
            let v = phase_velocity(a.entries(), twisted_state(30, q).unwrap().angles(), 1.0);
            assert!(norm(&v) < 1e-10, "q = {q}");
        }
    }

    #[test]
    fn equal_angles_synchronized_immediately() {
        let a = circulant(10, 2);
        let theta = PhaseVector::from_angles(vec![0.3; 10]).unwrap();
        let rep = simulate(&a, &theta, &SimOptions::default()).unwrap();
        assert_eq!(rep.steps, 0);
        assert_eq!(rep.classification, Classification::Synchronized);
    }

    #[test]
    fn complete_graph_synchronizes_from_random_starts() {
        let a = complete_graph(5);
        for seed in 0..20 {
            let rep = simulate(&a, &random_phases(5, seed).unwrap(), &SimOptions::default()).unwrap();
            assert!(rep.synchronized, "seed {seed}");
        }
    }

    #[test]
    fn subcritical_twisted_state_is_stable() {
        let a = circulant(40, 10);
        let rep = simulate(&a, &twisted_state(40, 1).unwrap(), &SimOptions::default()).unwrap();
        assert_eq!(rep.classification, Classification::StableNonsync);
        assert!(rep.hessian_min_eig > 0.0);
    }

    #[test]
    fn supercritical_twisted_state_is_unstable() {
        let a = circulant(40, 16);
        let rep = classify_equilibrium(&a, &twisted_state(40, 1).unwrap(), 1e-8).unwrap();
        assert_eq!(rep.classification, Classification::SaddleOrUnstable);
        assert!(rep.hessian_min_eig < 0.0);
    }

    #[test]
    fn linearization_at_sync_is_graph_laplacian() {
        let a = circulant(12, 3);
        let l = linearization(&a, &[0.7; 12]);
        let lap = DMatrix::from_fn(12, 12, |i, j| if i == j { 6.0 } else { -a.entries()[(i, j)] });
        assert!((l - &lap).amax() < 1e-14);
        let rep = classify_equilibrium(&a, &PhaseVector::from_angles(vec![0.0; 12]).unwrap(), 1e-9).unwrap();
        let values = linalg::symmetric_eigenvalues(&lap).unwrap();
        assert!((rep.hessian_min_eig - values[1]).abs() < 1e-10);
    }

    #[test]
    fn degenerate_shift_mode_uses_deflation() {
        // Two disconnected edges: zero eigenvalue with multiplicity two.
        let m = DMatrix::from_row_slice(4, 4, &[0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.]);
        let l = linearization(&SymmetricCost::new(m).unwrap(), &[0.0; 4]);
        assert!(shift_free_min_eig(&l).unwrap().abs() < 1e-12);
    }

    #[test]
    fn potential_is_monotone_along_rk4() {
        let a = circulant(25, 4);
        let opts = SimOptions {
            trajectory_stride: Some(1),
            max_time: Some(50.0 / 8.0),
            ..SimOptions::default()
        };
        let rep = simulate(&a, &random_phases(25, 3).unwrap(), &opts).unwrap();
        let tr = rep.trajectory.unwrap();
        let slack = 1e-9 * 8.0;
        for w in tr.states.windows(2) {
            assert!(potential(&a, &w[1]) >= potential(&a, &w[0]) - slack);
        }
    }

    #[test]
    fn global_shift_commutes_with_flow() {
        let a = circulant(20, 3);
        let theta = random_phases(20, 8).unwrap();
        let shifted = PhaseVector::from_angles(theta.angles().iter().map(|t| t + 1.1).collect()).unwrap();
        let opts = SimOptions {
            max_time: Some(20.0 / 6.0),
            ..SimOptions::default()
        };
        let p = simulate(&a, &theta, &opts).unwrap();
        let q = simulate(&a, &shifted, &opts).unwrap();
        for (x, y) in p.final_angles.angles().iter().zip(q.final_angles.angles()) {
            assert!((x + 1.1 - y).abs() < 1e-8);
        }
    }

    #[test]
    fn synchronization_test_handles_wraparound() {
        assert!(is_synchronized(&[0.0, std::f64::consts::TAU - 1e-4, 1e-4], 1e-6));
        assert!(!is_synchronized(&[0.0, 0.1], 1e-6));
        assert!(!is_synchronized(&[0.0, 2.0, 4.0], 1e-6));
    }

    #[test]
    fn signed_coupling_runs() {
        let m = DMatrix::from_row_slice(3, 3, &[0., 1., -1., 1., 0., 1., -1., 1., 0.]);
        let rep = simulate(&SymmetricCost::new(m).unwrap(), &random_phases(3, 1).unwrap(), &SimOptions::default()).unwrap();
        assert!(rep.velocity_norm.is_finite());
    }
}
