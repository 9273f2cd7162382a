//! Monte Carlo phase sweeps.
//!
//! A [`GridSpec`] lists sweeps; each sweep expands into grid cells (the
//! cartesian product of every list-valued parameter) and each cell runs
//! `trials` independent instances. Trial `t` of cell `c` uses the seed
//! [`derive_seed`]`(master_seed, c, t)` for everything it draws, so rows do
//! not depend on scheduling or on `jobs`.
//!
//! Grid files are TOML:
//!
//! ```toml
//! trials = 50
//! rank = 2
//! kuramoto = false
//!
//! [[sweep]]
//! family = "gaussian_z2"
//! n = 300
//! margin = [0.5, 2.0]
//! ```
//!
//! Numeric sweep keys accept a number or a list. Recognized keys per family:
//!
//! | family | keys |
//! |---|---|
//! | `gaussian_z2` | `sigma` or `margin` (`sigma = margin * sigma*(n)`) |
//! | `censored_block`, `signed_er` | `p` or `p_log` (`p = p_log log n / n`); `delta` or `margin` (`delta = margin * delta*`) |
//! | `sbm` | `p` or `a`, `q` or `b` (`p = a log n / n`); `margin` with `b` sets `a`; string `centering` |
//! | `circulant_knn` | `k` or `density` (`k = round(density n / 2)`) |
//! | `random_regular` | `d` |
//!
//! Every sweep needs `n`; `ground_truth` may be `all_ones`, `balanced` or
//! `random`, and `kuramoto = true/false` overrides the grid-level switch.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::{landscape_check, rank_one_bound, PreconditionerChoice, ReferenceProfile, Verdict, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::kuramoto::{random_phases, simulate, SimOptions};
use crate::models::{censored_delta_star, gaussian_sigma_star, margin_increases_difficulty, Centering, Family, GroundTruth, ModelSpec};
use crate::optimizer::{solve, SolveOptions};
use crate::rng::{derive_seed, stream};

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
enum Values {
    One(f64),
    Many(Vec<f64>),
}

impl Values {
    fn as_slice(&self) -> &[f64] {
        match self {
            Values::One(x) => std::slice::from_ref(x),
            Values::Many(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct SweepSpec {
    pub family: String,
    #[serde(default)]
    pub ground_truth: Option<GroundTruth>,
    #[serde(default)]
    pub centering: Option<Centering>,
    /// Overrides the grid-level `kuramoto` switch for this sweep.
    #[serde(default)]
    pub kuramoto: Option<bool>,
    #[serde(flatten)]
    values: BTreeMap<String, Values>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub trials: usize,
    #[serde(default = "default_rank")]
    pub rank: usize,
    /// Also simulate Kuramoto dynamics on the sign-aligned matrix. Sweeps
    /// can override this.
    #[serde(default)]
    pub kuramoto: bool,
    #[serde(default)]
    pub master_seed: Option<u64>,
    pub sweep: Vec<SweepSpec>,
}

fn default_rank() -> usize {
    2
}

const KNOWN_KEYS: [&str; 13] = ["n", "margin", "sigma", "p", "p_log", "q", "q_log", "delta", "a", "b", "k", "density", "d"];

/// One point of the grid before seeding.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub sweep: usize,
    pub family: Family,
    pub n: usize,
    pub ground_truth: GroundTruth,
    pub kuramoto: bool,
}

impl GridSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let grid: GridSpec = toml::from_str(text)?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.rank < 2 {
            return Err(Error::InvalidParameter(format!("rank must be at least 2, got {}", self.rank)));
        }
        if self.sweep.is_empty() {
            return Err(Error::InvalidParameter("grid has no [[sweep]] tables".into()));
        }
        Ok(())
    }

    /// Expands all sweeps into cells, numbered in file order. Within a sweep
    /// `n` varies slowest, then the remaining keys in alphabetical order.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut cells = Vec::new();
        for (s, sweep) in self.sweep.iter().enumerate() {
            for key in sweep.values.keys() {
                if !KNOWN_KEYS.contains(&key.as_str()) {
                    return Err(Error::InvalidParameter(format!("unknown sweep key {key:?}")));
                }
            }
            let ns = sweep
                .values
                .get("n")
                .ok_or_else(|| Error::InvalidParameter(format!("sweep {s} is missing n")))?;
            let rest: Vec<(&String, &Values)> = sweep.values.iter().filter(|(k, _)| k.as_str() != "n").collect();
            for &n in ns.as_slice() {
                if n < 2.0 || n.fract() != 0.0 {
                    return Err(Error::InvalidParameter(format!("n must be an integer >= 2, got {n}")));
                }
                let n = n as usize;
                let mut combos = vec![BTreeMap::new()];
                for (key, values) in &rest {
                    combos = combos
                        .into_iter()
                        .flat_map(|c| {
                            values.as_slice().iter().map(move |&v| {
                                let mut c = c.clone();
                                c.insert(key.as_str(), v);
                                c
                            })
                        })
                        .collect();
                }
                for params in combos {
                    let family = resolve_family(sweep, n, &params)?;
                    cells.push(Cell {
                        index: cells.len(),
                        sweep: s,
                        family,
                        n,
                        ground_truth: sweep.ground_truth.clone().unwrap_or_default(),
                        kuramoto: sweep.kuramoto.unwrap_or(self.kuramoto),
                    });
                }
            }
        }
        Ok(cells)
    }
}

fn log_scaled(n: usize, c: f64) -> f64 {
    c * (n as f64).ln() / n as f64
}

fn resolve_family(sweep: &SweepSpec, n: usize, params: &BTreeMap<&str, f64>) -> Result<Family> {
    let get = |k: &str| params.get(k).copied();
    let either = |a: &str, b: &str| -> Result<Option<(bool, f64)>> {
        match (get(a), get(b)) {
            (Some(_), Some(_)) => Err(Error::InvalidParameter(format!("give either {a} or {b}, not both"))),
            (Some(x), None) => Ok(Some((true, x))),
            (None, Some(x)) => Ok(Some((false, x))),
            (None, None) => Ok(None),
        }
    };
    let missing = |what: &str| Error::InvalidParameter(format!("{} sweep needs {what}", sweep.family));
    let allowed: &[&str] = match sweep.family.as_str() {
        "gaussian_z2" => &["sigma", "margin"],
        "censored_block" | "signed_er" => &["p", "p_log", "delta", "margin"],
        "sbm" => &["p", "a", "q", "b", "q_log", "margin"],
        "circulant_knn" => &["k", "density"],
        "random_regular" => &["d"],
        other => return Err(Error::InvalidParameter(format!("unknown family {other:?}"))),
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(k)) {
        return Err(Error::InvalidParameter(format!("key {k:?} does not apply to {}", sweep.family)));
    }
    let family = match sweep.family.as_str() {
        "gaussian_z2" => {
            let sigma = match either("sigma", "margin")? {
                Some((true, s)) => s,
                Some((false, m)) => m * gaussian_sigma_star(n),
                None => return Err(missing("sigma or margin")),
            };
            Family::GaussianZ2 { sigma }
        }
        "censored_block" | "signed_er" => {
            let p = match either("p", "p_log")? {
                Some((true, p)) => p,
                Some((false, c)) => log_scaled(n, c),
                None => return Err(missing("p or p_log")),
            };
            let delta = match either("delta", "margin")? {
                Some((true, d)) => d,
                Some((false, m)) => {
                    let star = censored_delta_star(n, p)
                        .ok_or_else(|| Error::InvalidParameter(format!("p = {p} is below the connectivity threshold; no delta* for margin")))?;
                    m * star
                }
                None => return Err(missing("delta or margin")),
            };
            if sweep.family == "censored_block" {
                Family::CensoredBlock { p, delta }
            } else {
                Family::SignedEr { p, delta }
            }
        }
        "sbm" => {
            let q = match (get("q"), get("b"), get("q_log")) {
                (Some(q), None, None) => q,
                (None, Some(b), None) | (None, None, Some(b)) => log_scaled(n, b),
                (None, None, None) => return Err(missing("q or b")),
                _ => return Err(Error::InvalidParameter("give only one of q, b".into())),
            };
            let p = match either("p", "a")? {
                Some((true, p)) => p,
                Some((false, a)) => log_scaled(n, a),
                None => {
                    let m = get("margin").ok_or_else(|| missing("p, a or margin"))?;
                    let b = q * n as f64 / (n as f64).ln();
                    let sqrt_a = b.sqrt() + m * std::f64::consts::SQRT_2;
                    log_scaled(n, sqrt_a * sqrt_a)
                }
            };
            if get("margin").is_some() && (get("p").is_some() || get("a").is_some()) {
                return Err(Error::InvalidParameter("give either p/a or margin, not both".into()));
            }
            Family::Sbm {
                p,
                q,
                centering: sweep.centering.unwrap_or(Centering::Known),
            }
        }
        "circulant_knn" => {
            let k = match either("k", "density")? {
                Some((true, k)) => k,
                Some((false, mu)) => (mu * n as f64 / 2.0).round(),
                None => return Err(missing("k or density")),
            };
            Family::CirculantKnn { k: k as usize }
        }
        "random_regular" => Family::RandomRegular {
            d: get("d").ok_or_else(|| missing("d"))? as usize,
        },
        _ => unreachable!(),
    };
    Ok(family)
}

/// Run-wide settings that are not part of the grid file.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseOptions {
    pub master_seed: u64,
    /// Worker threads; `0` uses all cores.
    pub jobs: usize,
    pub tol: f64,
    pub solver: SolveOptions,
    /// Zero out `wall_time_ms` so whole files can be compared byte for byte.
    pub omit_timing: bool,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        PhaseOptions {
            master_seed: 0,
            jobs: 0,
            tol: DEFAULT_TOL,
            solver: SolveOptions::default(),
            omit_timing: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSummary {
    pub family: String,
    pub n: usize,
    pub sigma: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub delta: Option<f64>,
    pub k: Option<usize>,
    pub d: Option<usize>,
}

impl ModelSummary {
    fn new(family: &Family, n: usize) -> Self {
        let mut s = ModelSummary {
            family: String::new(),
            n,
            sigma: None,
            p: None,
            q: None,
            delta: None,
            k: None,
            d: None,
        };
        s.family = match family {
            Family::GaussianZ2 { sigma } => {
                s.sigma = Some(*sigma);
                "gaussian_z2"
            }
            Family::CensoredBlock { p, delta } => {
                (s.p, s.delta) = (Some(*p), Some(*delta));
                "censored_block"
            }
            Family::SignedEr { p, delta } => {
                (s.p, s.delta) = (Some(*p), Some(*delta));
                "signed_er"
            }
            Family::Sbm { p, q, centering } => {
                (s.p, s.q) = (Some(*p), Some(*q));
                match centering {
                    Centering::Known => "sbm_known",
                    Centering::Estimated => "sbm_estimated",
                }
            }
            Family::CirculantKnn { k } => {
                s.k = Some(*k);
                "circulant_knn"
            }
            Family::RandomRegular { d } => {
                s.d = Some(*d);
                "random_regular"
            }
            Family::File { .. } => "file",
        }
        .to_string();
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateSummary {
    /// The smaller of the identity and degree-preconditioned ratios.
    pub condition_number: f64,
    pub delta_c: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverSummary {
    pub recovered: bool,
    pub second_order_critical: bool,
    pub iterations: usize,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KuramotoSummary {
    pub synchronized: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub cell: usize,
    pub trial_index: usize,
    pub seed: u64,
    pub model: ModelSummary,
    pub margin_factor: Option<f64>,
    pub certificate: Option<CertificateSummary>,
    pub solver: Option<SolverSummary>,
    pub kuramoto: Option<KuramotoSummary>,
    /// Set when any stage failed; the remaining stages still run.
    pub error: Option<String>,
    pub wall_time_ms: u64,
}

impl TrialRecord {
    /// Certified benign but the solver did not reach the planted solution.
    pub fn violates_certificate(&self) -> bool {
        let benign = self.certificate.as_ref().is_some_and(|c| c.verdict == Verdict::BenignForR);
        benign && !self.solver.as_ref().is_some_and(|s| s.recovered)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellAggregate {
    pub cell: usize,
    pub model: ModelSummary,
    pub margin_factor: Option<f64>,
    pub trials: usize,
    pub recovery_frequency: f64,
    pub certificate_frequency: f64,
    /// Mean over the trials where the bound was computed.
    pub mean_delta_c: Option<f64>,
    pub sync_frequency: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseResult {
    pub master_seed: u64,
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<CellAggregate>,
}

impl PhaseResult {
    pub fn violations(&self) -> Vec<&TrialRecord> {
        self.records.iter().filter(|r| r.violates_certificate()).collect()
    }
}

fn run_trial(cell: &Cell, trial: usize, grid: &GridSpec, opts: &PhaseOptions) -> TrialRecord {
    let start = Instant::now();
    let seed = derive_seed(opts.master_seed, cell.index as u64, trial as u64);
    let spec = ModelSpec {
        family: cell.family.clone(),
        n: cell.n,
        seed,
        ground_truth: cell.ground_truth.clone(),
    };
    let mut record = TrialRecord {
        cell: cell.index,
        trial_index: trial,
        seed,
        model: ModelSummary::new(&cell.family, cell.n),
        margin_factor: spec.margin_factor(),
        certificate: None,
        solver: None,
        kuramoto: None,
        error: None,
        wall_time_ms: 0,
    };
    let mut errors = Vec::new();
    match spec.generate() {
        Err(e) => errors.push(format!("generate: {e}")),
        Ok(inst) => {
            let mut best: Option<(f64, Verdict)> = None;
            for choice in [PreconditionerChoice::Identity, PreconditionerChoice::Degree] {
                match landscape_check(&inst.cost, &inst.z, Some(grid.rank), &choice, opts.tol) {
                    Ok(rep) => {
                        let better = match best {
                            None => true,
                            Some((ratio, verdict)) => {
                                (rep.is_benign() && verdict != Verdict::BenignForR) || (rep.verdict == verdict && rep.condition_number < ratio)
                            }
                        };
                        if better {
                            best = Some((rep.condition_number, rep.verdict));
                        }
                    }
                    Err(e) => errors.push(format!("certificate: {e}")),
                }
            }
            let delta_c = match spec.reference_degree() {
                Some(d_bar) => match rank_one_bound(&inst.cost, &inst.z, &ReferenceProfile::Uniform(d_bar)) {
                    Ok(r) if r.applicable => Some(r.delta_c),
                    Ok(_) => None,
                    Err(e) => {
                        errors.push(format!("delta_c: {e}"));
                        None
                    }
                },
                None => None,
            };
            record.certificate = best.map(|(condition_number, verdict)| CertificateSummary {
                condition_number,
                delta_c,
                verdict,
            });
            let solver_opts = SolveOptions {
                seed,
                ..opts.solver.clone()
            };
            match solve(&inst.cost, grid.rank, &solver_opts, Some(&inst.z)) {
                Ok(rep) => {
                    record.solver = Some(SolverSummary {
                        recovered: rep.recovered.unwrap_or(false),
                        second_order_critical: rep.second_order_critical,
                        iterations: rep.iterations,
                        objective: rep.objective,
                    })
                }
                Err(e) => errors.push(format!("solve: {e}")),
            }
            if cell.kuramoto {
                let sim = inst
                    .cost
                    .conjugated_by(&inst.z)
                    .and_then(|a| Ok((random_phases(cell.n, derive_seed(seed, stream::KURAMOTO_INIT, 0))?, a)))
                    .and_then(|(theta0, a)| {
                        let sim_opts = SimOptions {
                            seed,
                            stop_on_sync: true,
                            ..SimOptions::default()
                        };
                        simulate(&a, &theta0, &sim_opts)
                    });
                match sim {
                    Ok(rep) => record.kuramoto = Some(KuramotoSummary { synchronized: rep.synchronized }),
                    Err(e) => errors.push(format!("kuramoto: {e}")),
                }
            }
        }
    }
    if !errors.is_empty() {
        record.error = Some(errors.join("; "));
    }
    if !opts.omit_timing {
        record.wall_time_ms = start.elapsed().as_millis() as u64;
    }
    record
}

fn aggregate(cell: &Cell, records: &[TrialRecord]) -> CellAggregate {
    let trials = records.len();
    let frac = |count: usize| count as f64 / trials as f64;
    let recovered = records.iter().filter(|r| r.solver.as_ref().is_some_and(|s| s.recovered)).count();
    let certified = records
        .iter()
        .filter(|r| r.certificate.as_ref().is_some_and(|c| c.verdict == Verdict::BenignForR))
        .count();
    let deltas: Vec<f64> = records.iter().filter_map(|r| r.certificate.as_ref().and_then(|c| c.delta_c)).collect();
    let synced: Vec<bool> = records.iter().filter_map(|r| r.kuramoto.as_ref().map(|k| k.synchronized)).collect();
    CellAggregate {
        cell: cell.index,
        model: records.first().map_or_else(|| ModelSummary::new(&cell.family, cell.n), |r| r.model.clone()),
        margin_factor: records.first().and_then(|r| r.margin_factor),
        trials,
        recovery_frequency: frac(recovered),
        certificate_frequency: frac(certified),
        mean_delta_c: (!deltas.is_empty()).then(|| deltas.iter().sum::<f64>() / deltas.len() as f64),
        sync_frequency: (!synced.is_empty()).then(|| synced.iter().filter(|&&s| s).count() as f64 / synced.len() as f64),
    }
}

/// Runs every trial of every cell. Trials execute on a pool of `opts.jobs`
/// threads; results come back in (cell, trial) order.
pub fn run_phase(grid: &GridSpec, opts: &PhaseOptions) -> Result<PhaseResult> {
    grid.validate()?;
    opts.solver.validate()?;
    let cells = grid.cells()?;
    let tasks: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..grid.trials).map(move |t| (c, t))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let records: Vec<TrialRecord> = pool.install(|| tasks.par_iter().map(|&(c, t)| run_trial(&cells[c], t, grid, opts)).collect());
    let aggregates = cells
        .iter()
        .zip(records.chunks(grid.trials))
        .map(|(cell, chunk)| aggregate(cell, chunk))
        .collect();
    let result = PhaseResult {
        master_seed: opts.master_seed,
        records,
        aggregates,
    };
    for v in result.violations() {
        log::error!("cell {} trial {}: certified benign but not recovered", v.cell, v.trial_index);
    }
    Ok(result)
}

/// Recovery-frequency inversions against the expected direction, counted
/// per (sweep, n) group of cells ordered by margin factor.
pub fn monotonicity_inversions(grid: &GridSpec, result: &PhaseResult) -> Result<usize> {
    let cells = grid.cells()?;
    let mut groups: BTreeMap<(usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for (cell, agg) in cells.iter().zip(&result.aggregates) {
        if let Some(m) = agg.margin_factor {
            let freq = if margin_increases_difficulty(&cell.family) {
                agg.recovery_frequency
            } else {
                -agg.recovery_frequency
            };
            groups.entry((cell.sweep, cell.n)).or_default().push((m, freq));
        }
    }
    let mut inversions = 0;
    for points in groups.values_mut() {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        inversions += points.windows(2).filter(|w| w[1].1 > w[0].1).count();
    }
    Ok(inversions)
}

/// Column order of [`write_csv`].
pub const CSV_COLUMNS: [&str; 25] = [
    "kind",
    "cell",
    "trial",
    "seed",
    "family",
    "n",
    "sigma",
    "p",
    "q",
    "delta",
    "k",
    "d",
    "margin_factor",
    "condition_number",
    "delta_c",
    "verdict",
    "recovered",
    "second_order_critical",
    "iterations",
    "objective",
    "synchronized",
    "recovery_frequency",
    "certificate_frequency",
    "sync_frequency",
    "error",
];

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        x.to_string()
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::BenignForR => "benign_for_r",
        Verdict::PsdCertifiedOnly => "psd_certified_only",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn model_fields(m: &ModelSummary) -> [String; 8] {
    [
        m.family.clone(),
        m.n.to_string(),
        opt(m.sigma.map(float)),
        opt(m.p.map(float)),
        opt(m.q.map(float)),
        opt(m.delta.map(float)),
        opt(m.k),
        opt(m.d),
    ]
}

/// Trial rows of each cell followed by its aggregate row, plus a trailing
/// `wall_time_ms` column.
pub fn write_csv(result: &PhaseResult, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
    header.push("wall_time_ms");
    w.write_record(&header)?;
    let trials = result.aggregates.first().map_or(0, |a| a.trials);
    for (agg, chunk) in result.aggregates.iter().zip(result.records.chunks(trials.max(1))) {
        for r in chunk {
            let mut row = vec!["trial".to_string(), r.cell.to_string(), r.trial_index.to_string(), r.seed.to_string()];
            row.extend(model_fields(&r.model));
            row.push(opt(r.margin_factor.map(float)));
            let c = r.certificate.as_ref();
            row.push(opt(c.map(|c| float(c.condition_number))));
            row.push(opt(c.and_then(|c| c.delta_c).map(float)));
            row.push(opt(c.map(|c| verdict_name(c.verdict))));
            let s = r.solver.as_ref();
            row.push(opt(s.map(|s| s.recovered)));
            row.push(opt(s.map(|s| s.second_order_critical)));
            row.push(opt(s.map(|s| s.iterations)));
            row.push(opt(s.map(|s| float(s.objective))));
            row.push(opt(r.kuramoto.as_ref().map(|k| k.synchronized)));
            row.extend([String::new(), String::new(), String::new()]);
            row.push(r.error.clone().unwrap_or_default());
            row.push(r.wall_time_ms.to_string());
            w.write_record(&row)?;
        }
        let mut row = vec!["aggregate".to_string(), agg.cell.to_string(), agg.trials.to_string(), String::new()];
        row.extend(model_fields(&agg.model));
        row.push(opt(agg.margin_factor.map(float)));
        row.push(String::new());
        row.push(opt(agg.mean_delta_c.map(float)));
        row.extend(std::iter::repeat_n(String::new(), 6));
        row.push(float(agg.recovery_frequency));
        row.push(float(agg.certificate_frequency));
        row.push(opt(agg.sync_frequency.map(float)));
        row.push(String::new());
        row.push(String::new());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
trials = 3
rank = 2

[[sweep]]
family = "gaussian_z2"
n = [20, 30]
margin = [0.3, 3.0]
"#;

    #[test]
    fn cells_expand_in_documented_order() {
        let grid = GridSpec::from_toml(SMALL).unwrap();
        let cells = grid.cells().unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells.iter().map(|c| c.n).collect::<Vec<_>>(), [20, 20, 30, 30]);
        let Family::GaussianZ2 { sigma } = cells[3].family else { panic!() };
        assert!((sigma - 3.0 * gaussian_sigma_star(30)).abs() < 1e-12);
    }

    #[test]
    fn bad_grids_rejected() {
        for bad in [
            "trials = 0\n[[sweep]]\nfamily = \"gaussian_z2\"\nn = 10\nsigma = 1\n",
            "trials = 1\n[[sweep]]\nfamily = \"gaussian_z2\"\nn = 10\n",
            "trials = 1\n[[sweep]]\nfamily = \"gaussian_z2\"\nn = 10\nsigma = 1\nmargin = 1\n",
            "trials = 1\n[[sweep]]\nfamily = \"gaussian_z2\"\nn = 10\nsigma = 1\nk = 2\n",
            "trials = 1\n[[sweep]]\nfamily = \"nope\"\nn = 10\n",
            "trials = 1\n[[sweep]]\nfamily = \"gaussian_z2\"\nsigma = 1\n",
            "trials = 1\nrank = 1\n[[sweep]]\nfamily = \"gaussian_z2\"\nn = 10\nsigma = 1\n",
        ] {
            let r = GridSpec::from_toml(bad).and_then(|g| g.cells());
            assert!(r.is_err(), "{bad}");
        }
    }

    #[test]
    fn family_keys_resolve() {
        let grid = GridSpec::from_toml(
            r#"
trials = 1
[[sweep]]
family = "sbm"
centering = "estimated"
n = 100
b = 1
margin = 2
[[sweep]]
family = "censored_block"
n = 100
p_log = 3
delta = 1
[[sweep]]
family = "circulant_knn"
n = 60
density = 0.5
"#,
        )
        .unwrap();
        let cells = grid.cells().unwrap();
        let Family::Sbm { p, q, centering } = cells[0].family else { panic!() };
        let spec = ModelSpec {
            family: cells[0].family.clone(),
            n: 100,
            seed: 0,
            ground_truth: GroundTruth::AllOnes,
        };
        assert!((spec.margin_factor().unwrap() - 2.0).abs() < 1e-12);
        assert!((q - log_scaled(100, 1.0)).abs() < 1e-15 && p > q);
        assert_eq!(centering, Centering::Estimated);
        assert_eq!(cells[1].family, Family::CensoredBlock { p: log_scaled(100, 3.0), delta: 1.0 });
        assert_eq!(cells[2].family, Family::CirculantKnn { k: 15 });
    }

    #[test]
    fn rows_independent_of_jobs() {
        let grid = GridSpec::from_toml(SMALL).unwrap();
        let run = |jobs| {
            let opts = PhaseOptions {
                master_seed: 11,
                jobs,
                omit_timing: true,
                ..PhaseOptions::default()
            };
            let mut buf = Vec::new();
            write_csv(&run_phase(&grid, &opts).unwrap(), &mut buf).unwrap();
            buf
        };
        let one = run(1);
        assert_eq!(one, run(3));
        let text = String::from_utf8(one).unwrap();
        assert_eq!(text.lines().count(), 1 + 4 * 3 + 4);
        assert!(text.lines().next().unwrap().ends_with("error,wall_time_ms"));
    }

    #[test]
    fn easy_cells_recover_and_never_violate() {
        let grid = GridSpec::from_toml(SMALL).unwrap();
        let result = run_phase(&grid, &PhaseOptions::default()).unwrap();
        assert!(result.violations().is_empty());
        assert_eq!(result.aggregates[0].recovery_frequency, 1.0);
        assert!(result.aggregates[1].recovery_frequency < 1.0);
        assert!(result.records.iter().all(|r| r.error.is_none()));
        assert_eq!(monotonicity_inversions(&grid, &result).unwrap(), 0);
        assert_eq!(result.records[4].seed, derive_seed(0, 1, 1));
    }

    #[test]
    fn failures_are_recorded_per_row() {
        let grid = GridSpec::from_toml("trials = 2\n[[sweep]]\nfamily = \"random_regular\"\nn = 5\nd = 3\n").unwrap();
        let result = run_phase(&grid, &PhaseOptions::default()).unwrap();
        assert_eq!(result.records.len(), 2);
        assert!(result.records.iter().all(|r| r.error.as_deref().is_some_and(|e| e.starts_with("generate"))));
        assert_eq!(result.aggregates[0].recovery_frequency, 0.0);
    }
}
