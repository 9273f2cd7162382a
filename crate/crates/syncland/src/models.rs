//! Instance generators and exact-recovery thresholds.
//!
//! Every generator is a pure function of its parameters and seed, emits an
//! exactly symmetric matrix with zero diagonal, and draws pairs `i < j` in
//! row-major order from one [`ModelRng`](crate::rng::ModelRng) stream.

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{SignVector, SymmetricCost};
use crate::rng::{derive_seed, rng_from_seed, stream, ModelRng};

/// Attempts allowed by [`random_regular`] before giving up.
pub const REGULAR_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// Subtract `(p + q) / 2`.
    Known,
    /// Subtract the mean entry `<A, 1 1^T> / n^2`.
    Estimated,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundTruth {
    #[default]
    AllOnes,
    /// `+1` on the first `n / 2` indices, `-1` on the rest.
    Balanced,
    /// Independent fair signs, drawn from the spec seed.
    Random,
    Explicit(Vec<f64>),
}

impl GroundTruth {
    pub fn resolve(&self, n: usize, seed: u64) -> Result<SignVector> {
        match self {
            GroundTruth::AllOnes => Ok(SignVector::ones(n)),
            GroundTruth::Balanced => SignVector::from_signs(&(0..n).map(|i| if i < n / 2 { 1.0 } else { -1.0 }).collect::<Vec<_>>()),
            GroundTruth::Random => {
                let mut rng = rng_from_seed(derive_seed(seed, stream::GROUND_TRUTH, 0));
                SignVector::from_signs(&(0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect::<Vec<_>>())
            }
            GroundTruth::Explicit(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch {
                        what: "explicit ground truth",
                        expected: n,
                        found: v.len(),
                    });
                }
                SignVector::from_signs(v)
            }
        }
    }
}

/// Family and family-specific parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    GaussianZ2 { sigma: f64 },
    CensoredBlock { p: f64, delta: f64 },
    Sbm { p: f64, q: f64, centering: Centering },
    SignedEr { p: f64, delta: f64 },
    CirculantKnn { k: usize },
    RandomRegular { d: usize },
    /// A matrix in the text format; `n` must match the file.
    File { path: PathBuf },
}

/// Declarative description of one instance, read from JSON spec files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub family: Family,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ground_truth: GroundTruth,
}

/// A generated cost matrix with its planted signs.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub cost: SymmetricCost,
    pub z: SignVector,
}

fn probability(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {x}")));
    }
    Ok(())
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("n must be at least 2, got {}", self.n)));
        }
        match &self.family {
            Family::GaussianZ2 { sigma } => {
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidParameter(format!("sigma must be nonnegative, got {sigma}")));
                }
            }
            Family::CensoredBlock { p, delta } | Family::SignedEr { p, delta } => {
                probability("p", *p)?;
                probability("delta", *delta)?;
            }
            Family::Sbm { p, q, .. } => {
                probability("p", *p)?;
                probability("q", *q)?;
                if p < q {
                    return Err(Error::InvalidParameter(format!("sbm needs p >= q, got p = {p}, q = {q}")));
                }
            }
            Family::CirculantKnn { k } => {
                if self.n < 2 * k + 1 {
                    return Err(Error::InvalidParameter(format!("circulant needs n >= 2k + 1, got n = {}, k = {k}", self.n)));
                }
            }
            Family::RandomRegular { d } => {
                if *d >= self.n || (self.n * d) % 2 == 1 {
                    return Err(Error::InvalidParameter(format!("regular graph needs d < n and n d even, got n = {}, d = {d}", self.n)));
                }
            }
            Family::File { .. } => {}
        }
        Ok(())
    }

    /// Builds the instance. The ground truth is resolved first, then the
    /// matrix is drawn from `seed`.
    pub fn generate(&self) -> Result<Instance> {
        self.validate()?;
        let n = self.n;
        let z = match &self.family {
            Family::SignedEr { .. } | Family::CirculantKnn { .. } | Family::RandomRegular { .. } => SignVector::ones(n),
            _ => self.ground_truth.resolve(n, self.seed)?,
        };
        let cost = match &self.family {
            Family::GaussianZ2 { sigma } => gaussian_z2(n, *sigma, &z, self.seed)?,
            Family::CensoredBlock { p, delta } => censored_block(n, *p, *delta, &z, self.seed)?,
            Family::Sbm { p, q, centering } => center(&sbm(n, *p, *q, &z, self.seed)?, *centering, Some((*p, *q)))?,
            Family::SignedEr { p, delta } => signed_er(n, *p, *delta, self.seed)?,
            Family::CirculantKnn { k } => circulant_knn(n, *k)?,
            Family::RandomRegular { d } => random_regular(n, *d, self.seed)?,
            Family::File { path } => {
                let cost = crate::io::read_cost(path)?.into_real()?;
                if cost.n() != n {
                    return Err(Error::DimensionMismatch {
                        what: "matrix file size",
                        expected: n,
                        found: cost.n(),
                    });
                }
                cost
            }
        };
        Ok(Instance { cost, z })
    }

    /// Signal parameter relative to its exact-recovery threshold.
    ///
    /// Gaussian: `sigma / sigma*` (larger is harder). Censored and signed:
    /// `delta / delta*` (larger is easier). SBM: `(sqrt a - sqrt b) / sqrt 2`
    /// with `p = a log n / n`, `q = b log n / n` (larger is easier).
    pub fn margin_factor(&self) -> Option<f64> {
        let n = self.n;
        match &self.family {
            Family::GaussianZ2 { sigma } => Some(sigma / gaussian_sigma_star(n)),
            Family::CensoredBlock { p, delta } | Family::SignedEr { p, delta } => censored_delta_star(n, *p).map(|d| delta / d),
            Family::Sbm { p, q, .. } => {
                let scale = n as f64 / (n as f64).ln();
                Some(((p * scale).sqrt() - (q * scale).sqrt()) / std::f64::consts::SQRT_2)
            }
            _ => None,
        }
    }

    /// `d_bar` of the rank-one mean `E C = (d_bar / n) z z^T` off the diagonal.
    pub fn reference_degree(&self) -> Option<f64> {
        let n = self.n as f64;
        match &self.family {
            Family::GaussianZ2 { .. } => Some(n),
            Family::CensoredBlock { p, delta } | Family::SignedEr { p, delta } => Some(n * p * delta),
            Family::Sbm { p, q, .. } => Some(n * (p - q) / 2.0),
            _ => None,
        }
    }
}

/// Whether raising the margin factor makes recovery harder.
pub fn margin_increases_difficulty(family: &Family) -> bool {
    matches!(family, Family::GaussianZ2 { .. })
}

fn symmetric_from_upper(n: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Result<SymmetricCost> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = entry(i, j);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    SymmetricCost::new(m)
}

fn check_truth(n: usize, z: &SignVector) -> Result<()> {
    if z.n() != n {
        return Err(Error::DimensionMismatch {
            what: "ground truth length",
            expected: n,
            found: z.n(),
        });
    }
    Ok(())
}

/// `C = z z^T + sigma W` with standard normal `W`, zero diagonal.
pub fn gaussian_z2(n: usize, sigma: f64, z: &SignVector, seed: u64) -> Result<SymmetricCost> {
    check_truth(n, z)?;
    let mut rng = rng_from_seed(seed);
    let zs = z.entries();
    symmetric_from_upper(n, |i, j| {
        let xi: f64 = rng.sample(StandardNormal);
        zs[i] * zs[j] + sigma * xi
    })
}

fn censored_entries(n: usize, p: f64, delta: f64, z: &DVector<f64>, rng: &mut ModelRng) -> Result<SymmetricCost> {
    let keep = (1.0 + delta) * p / 2.0;
    symmetric_from_upper(n, |i, j| {
        let u: f64 = rng.random();
        if u < keep {
            z[i] * z[j]
        } else if u < p {
            -z[i] * z[j]
        } else {
            0.0
        }
    })
}

/// Each pair observed with probability `p`; an observation is `z_i z_j`
/// with probability `(1 + delta) / 2` and flipped otherwise.
pub fn censored_block(n: usize, p: f64, delta: f64, z: &SignVector, seed: u64) -> Result<SymmetricCost> {
    check_truth(n, z)?;
    probability("p", p)?;
    probability("delta", delta)?;
    censored_entries(n, p, delta, z.entries(), &mut rng_from_seed(seed))
}

/// Random signed coupling: the censored model with `z = 1`.
pub fn signed_er(n: usize, p: f64, delta: f64, seed: u64) -> Result<SymmetricCost> {
    censored_block(n, p, delta, &SignVector::ones(n), seed)
}

/// Two-community adjacency: edge probability `p` inside, `q` across.
pub fn sbm(n: usize, p: f64, q: f64, z: &SignVector, seed: u64) -> Result<SymmetricCost> {
    check_truth(n, z)?;
    probability("p", p)?;
    probability("q", q)?;
    if p < q {
        return Err(Error::InvalidParameter(format!("sbm needs p >= q, got p = {p}, q = {q}")));
    }
    let mut rng = rng_from_seed(seed);
    let zs = z.entries();
    symmetric_from_upper(n, |i, j| {
        let u: f64 = rng.random();
        let threshold = if zs[i] == zs[j] { p } else { q };
        if u < threshold {
            1.0
        } else {
            0.0
        }
    })
}

/// `A - c 1 1^T`, every entry including the diagonal.
pub fn center(a: &SymmetricCost, mode: Centering, pq: Option<(f64, f64)>) -> Result<SymmetricCost> {
    let n = a.n();
    let c = match mode {
        Centering::Known => {
            let (p, q) = pq.ok_or_else(|| Error::InvalidParameter("known centering needs p and q".into()))?;
            (p + q) / 2.0
        }
        Centering::Estimated => a.entries().sum() / (n * n) as f64,
    };
    SymmetricCost::new(a.entries().map(|x| x - c))
}

/// Ring with each node joined to its `k` nearest neighbours on both sides.
pub fn circulant_knn(n: usize, k: usize) -> Result<SymmetricCost> {
    if n < 2 * k + 1 {
        return Err(Error::InvalidParameter(format!("circulant needs n >= 2k + 1, got n = {n}, k = {k}")));
    }
    symmetric_from_upper(n, |i, j| {
        let d = j - i;
        if d.min(n - d) <= k {
            1.0
        } else {
            0.0
        }
    })
}

/// Uniform-ish simple `d`-regular graph by incremental pairing: stubs are
/// shuffled and paired, unusable pairs are put back and re-paired, and the
/// whole construction restarts if the leftovers cannot be completed.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<SymmetricCost> {
    if d >= n || (n * d) % 2 == 1 {
        return Err(Error::InvalidParameter(format!("regular graph needs d < n and n d even, got n = {n}, d = {d}")));
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..REGULAR_ATTEMPTS {
        if let Some(edges) = try_regular(n, d, &mut rng) {
            let mut m = DMatrix::zeros(n, n);
            for (i, j) in edges {
                m[(i, j)] = 1.0;
                m[(j, i)] = 1.0;
            }
            return SymmetricCost::new(m);
        }
    }
    Err(Error::GenerationFailed {
        n,
        d,
        attempts: REGULAR_ATTEMPTS,
    })
}

fn try_regular(n: usize, d: usize, rng: &mut ModelRng) -> Option<Vec<(usize, usize)>> {
    let mut edges: HashSet<(usize, usize)> = HashSet::with_capacity(n * d / 2);
    let mut order = Vec::with_capacity(n * d / 2);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    while !stubs.is_empty() {
        let mut leftover: BTreeMap<usize, usize> = BTreeMap::new();
        stubs.shuffle(rng);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a != b && edges.insert((a, b)) {
                order.push((a, b));
            } else {
                *leftover.entry(a).or_default() += 1;
                *leftover.entry(b).or_default() += 1;
            }
        }
        if !completable(&edges, &leftover) {
            return None;
        }
        stubs = leftover.iter().flat_map(|(&v, &count)| std::iter::repeat_n(v, count)).collect();
    }
    Some(order)
}

/// Some pair of distinct leftover vertices is not yet joined.
fn completable(edges: &HashSet<(usize, usize)>, leftover: &BTreeMap<usize, usize>) -> bool {
    if leftover.is_empty() {
        return true;
    }
    let vertices: Vec<usize> = leftover.keys().copied().collect();
    for (x, &a) in vertices.iter().enumerate() {
        for &b in &vertices[..x] {
            if !edges.contains(&(b.min(a), b.max(a))) {
                return true;
            }
        }
    }
    false
}

/// `sigma* = sqrt(n / (2 log n))`.
pub fn gaussian_sigma_star(n: usize) -> f64 {
    let n = n as f64;
    (n / (2.0 * n.ln())).sqrt()
}

/// `(n p / log n) (1 - sqrt(1 - delta^2))`; exact recovery needs this above 1.
pub fn censored_margin(n: usize, p: f64, delta: f64) -> f64 {
    let n_f = n as f64;
    n_f * p / n_f.ln() * (1.0 - (1.0 - delta * delta).sqrt())
}

/// The `delta` at which [`censored_margin`] equals 1, if any `delta <= 1`
/// reaches it.
pub fn censored_delta_star(n: usize, p: f64) -> Option<f64> {
    let t = (n as f64).ln() / (n as f64 * p);
    if p > 0.0 && t <= 1.0 {
        Some((1.0 - (1.0 - t).powi(2)).sqrt())
    } else {
        None
    }
}

/// `(n / log n) (sqrt((1-e) p + e q) - sqrt((1-e) q + e p))^2`; exact recovery
/// needs this at least 2.
pub fn sbm_margin(n: usize, p: f64, q: f64, epsilon: f64) -> f64 {
    let n_f = n as f64;
    let inner = ((1.0 - epsilon) * p + epsilon * q).sqrt() - ((1.0 - epsilon) * q + epsilon * p).sqrt();
    n_f / n_f.ln() * inner * inner
}
