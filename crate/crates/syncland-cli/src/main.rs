//! `syncland` command-line interface.
//!
//! Exit codes: 0 success or benign, 2 inconclusive, 1 error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use syncland::certificates::{self, landscape_check, PreconditionerChoice, Verdict};
use syncland::circulant::{dft_spectrum, finite_size_stability};
use syncland::harness::{self, GridSpec, PhaseOptions};
use syncland::io as files;
use syncland::kuramoto::{self, Integrator, SimOptions};
use syncland::models::ModelSpec;
use syncland::optimizer::{self, SolveOptions, StepRule};
use syncland::problem::{AnyCost, PhaseVector, SignVector, SphereConfig};

#[derive(Parser, Debug)]
#[command(name = "syncland", version, about = "Benign-landscape certificates, Burer-Monteiro solver and Kuramoto simulator for synchronization problems")]
struct Cli {
    /// Seed for every random draw (master seed for `phase`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for `phase` (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Zero-eigenvalue / classification tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output format; defaults to json, or csv for `circulant` and `phase`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Precond {
    Identity,
    Degree,
    /// Report both; benign if either is.
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a matrix from a JSON model spec.
    Gen {
        spec: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Also write the planted signs.
        #[arg(long)]
        signs: Option<PathBuf>,
    },
    /// Check the landscape certificate at a planted solution.
    Certify {
        matrix: PathBuf,
        /// Sign file, or `ones`.
        #[arg(long, default_value = "ones")]
        z: String,
        #[arg(short, long, default_value_t = 2)]
        rank: usize,
        #[arg(long, value_enum, default_value = "identity")]
        preconditioner: Precond,
        /// Treat the matrix as Kuramoto couplings and run the synchronization check.
        #[arg(long)]
        kuramoto: bool,
    },
    /// Run the Riemannian ascent.
    Solve {
        matrix: PathBuf,
        #[arg(short, long, default_value_t = 2)]
        rank: usize,
        /// Sign file or `ones`; enables the recovery check.
        #[arg(long)]
        z: Option<String>,
        /// `random`, `twisted:q` or a configuration file.
        #[arg(long, default_value = "random")]
        init: String,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        grad_tol: Option<f64>,
        /// Fixed step size instead of backtracking.
        #[arg(long)]
        step: Option<f64>,
        /// Write the final configuration.
        #[arg(long)]
        out_config: Option<PathBuf>,
    },
    /// Simulate Kuramoto dynamics and classify the end state.
    Kuramoto {
        matrix: PathBuf,
        /// `random` or `twisted:q`.
        #[arg(long, default_value = "random")]
        init: String,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        max_time: Option<f64>,
        #[arg(long, value_enum, default_value = "rk4")]
        integrator: IntegratorArg,
        #[arg(long)]
        sync_tol: Option<f64>,
        #[arg(long)]
        stop_on_sync: bool,
        /// Write `t, theta_1..theta_n` rows to this CSV file.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        stride: usize,
    },
    /// Closed-form circulant spectra and the stability summary.
    Circulant {
        #[arg(short)]
        n: usize,
        #[arg(short)]
        k: usize,
    },
    /// Monte Carlo phase sweep over a TOML grid.
    Phase {
        grid: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Override the grid's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Write zeros in `wall_time_ms`.
        #[arg(long)]
        omit_timing: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum IntegratorArg {
    Rk4,
    Euler,
}

const EXIT_INCONCLUSIVE: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn require_json(format: Option<Format>, what: &str) -> Result<()> {
    if format == Some(Format::Csv) {
        bail!("{what} output is JSON only");
    }
    Ok(())
}

fn load_signs(arg: &str, n: usize) -> Result<SignVector> {
    if arg == "ones" {
        return Ok(SignVector::ones(n));
    }
    let z = files::read_signs(arg).with_context(|| format!("reading sign file {arg}"))?;
    if z.n() != n {
        bail!("sign file has {} entries, matrix has {n} rows", z.n());
    }
    Ok(z)
}

fn load_matrix(path: &Path) -> Result<AnyCost> {
    files::read_cost(path).with_context(|| format!("reading matrix {}", path.display()))
}

fn twist(arg: &str) -> Result<Option<i64>> {
    match arg.strip_prefix("twisted:") {
        Some(q) => Ok(Some(q.parse().with_context(|| format!("bad winding number in {arg:?}"))?)),
        None => Ok(None),
    }
}

fn run(cli: Cli) -> Result<u8> {
    let tol = cli.tol.unwrap_or(certificates::DEFAULT_TOL);
    match cli.command {
        Command::Gen { spec, out, signs } => {
            let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let mut model: ModelSpec = serde_json::from_str(&text).with_context(|| format!("invalid model spec {}", spec.display()))?;
            if let Some(seed) = cli.seed {
                model.seed = seed;
            }
            let inst = model.generate()?;
            files::write_cost(&inst.cost, &out)?;
            if let Some(path) = signs {
                files::write_signs(&inst.z, path)?;
            }
            Ok(0)
        }
        Command::Certify {
            matrix,
            z,
            rank,
            preconditioner,
            kuramoto,
        } => {
            require_json(cli.format, "certify")?;
            let cost = load_matrix(&matrix)?;
            if kuramoto {
                let a = cost.into_real()?;
                let cert = certificates::kuramoto_sync_check(&a)?;
                print_json(&cert)?;
                return Ok(if cert.synchronizing { 0 } else { EXIT_INCONCLUSIVE });
            }
            let choices = match preconditioner {
                Precond::Identity => vec![PreconditionerChoice::Identity],
                Precond::Degree => vec![PreconditionerChoice::Degree],
                Precond::Both => vec![PreconditionerChoice::Identity, PreconditionerChoice::Degree],
            };
            if rank < 1 {
                bail!("rank must be positive");
            }
            let mut reports = Vec::new();
            for choice in &choices {
                let report = match &cost {
                    AnyCost::Real(c) => {
                        if rank < 2 {
                            bail!("real relaxations need rank >= 2");
                        }
                        landscape_check(c, &load_signs(&z, c.n())?, Some(rank), choice, tol)?
                    }
                    AnyCost::Complex(c) => landscape_check(c, &load_signs(&z, c.n())?.to_complex(), Some(rank), choice, tol)?,
                };
                reports.push(report);
            }
            let benign = reports.iter().any(|r| r.verdict == Verdict::BenignForR);
            if reports.len() == 1 {
                print_json(&reports[0])?;
            } else {
                print_json(&reports)?;
            }
            Ok(if benign { 0 } else { EXIT_INCONCLUSIVE })
        }
        Command::Solve {
            matrix,
            rank,
            z,
            init,
            max_iters,
            grad_tol,
            step,
            out_config,
        } => {
            require_json(cli.format, "solve")?;
            let c = load_matrix(&matrix)?.into_real().context("solve takes a real matrix")?;
            let mut opts = SolveOptions {
                seed: cli.seed.unwrap_or(0),
                ..SolveOptions::default()
            };
            if let Some(m) = max_iters {
                opts.max_iters = m;
            }
            if let Some(g) = grad_tol {
                opts.grad_tol = g;
            }
            if let Some(s) = step {
                opts.step_rule = StepRule::Fixed { step: s };
            }
            let z = z.map(|arg| load_signs(&arg, c.n())).transpose()?;
            let report = if init == "random" {
                optimizer::solve(&c, rank, &opts, z.as_ref())?
            } else {
                let y0 = match twist(&init)? {
                    Some(q) => {
                        if rank < 2 {
                            bail!("a twisted start needs rank >= 2");
                        }
                        let circle = SphereConfig::from_phases(&kuramoto::twisted_state(c.n(), q)?);
                        SphereConfig::new(circle.into_rows().resize_horizontally(rank, 0.0))?
                    }
                    None => files::read_config(&init).with_context(|| format!("reading configuration {init}"))?,
                };
                if y0.r() != rank || y0.n() != c.n() {
                    bail!("initial configuration is {}x{}, expected {}x{rank}", y0.n(), y0.r(), c.n());
                }
                optimizer::solve_from(&c, y0, &opts, z.as_ref())?
            };
            if let Some(path) = out_config {
                files::write_config(&report.final_y, path)?;
            }
            print_json(&report)?;
            Ok(if report.second_order_critical { 0 } else { EXIT_INCONCLUSIVE })
        }
        Command::Kuramoto {
            matrix,
            init,
            coupling,
            dt,
            max_time,
            integrator,
            sync_tol,
            stop_on_sync,
            trajectory,
            stride,
        } => {
            require_json(cli.format, "kuramoto")?;
            let a = load_matrix(&matrix)?.into_real().context("kuramoto takes a real coupling matrix")?;
            let seed = cli.seed.unwrap_or(0);
            let angles = match twist(&init)? {
                Some(q) => kuramoto::twisted_state(a.n(), q)?,
                None if init == "random" => kuramoto::random_phases(a.n(), seed)?,
                None => bail!("--init must be `random` or `twisted:q`, got {init:?}"),
            };
            let theta0 = PhaseVector::new(angles.angles().to_vec(), coupling)?;
            let opts = SimOptions {
                time_step: dt,
                max_time,
                integrator: match integrator {
                    IntegratorArg::Rk4 => Integrator::Rk4,
                    IntegratorArg::Euler => Integrator::Euler,
                },
                sync_tol: sync_tol.unwrap_or(kuramoto::DEFAULT_SYNC_TOL),
                stall_tol: cli.tol,
                seed,
                stop_on_sync,
                trajectory_stride: trajectory.as_ref().map(|_| stride.max(1)),
            };
            let report = kuramoto::simulate(&a, &theta0, &opts)?;
            if let (Some(path), Some(tr)) = (trajectory, &report.trajectory) {
                let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                files::write_trajectory(tr, BufWriter::new(file))?;
            }
            print_json(&report)?;
            Ok(0)
        }
        Command::Circulant { n, k } => {
            let spectrum = dft_spectrum(n, k)?;
            let record = finite_size_stability(n, k)?;
            if cli.format == Some(Format::Json) {
                #[derive(Serialize)]
                struct Out<'a> {
                    spectrum: &'a syncland::circulant::CirculantSpectrum,
                    stability: &'a syncland::circulant::StabilityRecord,
                }
                print_json(&Out {
                    spectrum: &spectrum,
                    stability: &record,
                })?;
                return Ok(0);
            }
            let stdout = io::stdout();
            let mut out = stdout.lock();
            writeln!(out, "m,h_a,h_l,h_ltilde")?;
            for m in 0..spectrum.h_a.len() {
                writeln!(out, "{m},{:?},{:?},{:?}", spectrum.h_a[m], spectrum.h_l[m], spectrum.h_ltilde[m])?;
            }
            writeln!(out)?;
            writeln!(out, "n,k,condition_number,lambda2_twisted,h_ltilde_1,predicts_spurious,condition_exceeds_two")?;
            writeln!(
                out,
                "{},{},{},{:?},{:?},{},{}",
                record.n,
                record.k,
                if record.condition_number.is_finite() {
                    format!("{:?}", record.condition_number)
                } else {
                    "inf".into()
                },
                record.lambda2_twisted,
                record.h_ltilde_1,
                record.predicts_spurious,
                record.condition_exceeds_two
            )?;
            Ok(0)
        }
        Command::Phase {
            grid,
            out,
            trials,
            omit_timing,
        } => {
            let mut spec = GridSpec::read(&grid).with_context(|| format!("reading grid {}", grid.display()))?;
            if let Some(t) = trials {
                if t == 0 {
                    bail!("--trials must be at least 1");
                }
                spec.trials = t;
            }
            let opts = PhaseOptions {
                master_seed: cli.seed.or(spec.master_seed).unwrap_or(0),
                jobs: cli.jobs,
                tol,
                omit_timing,
                ..PhaseOptions::default()
            };
            let result = harness::run_phase(&spec, &opts)?;
            let sink: Box<dyn Write> = match &out {
                Some(path) => Box::new(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?)),
                None => Box::new(io::stdout().lock()),
            };
            let mut sink = sink;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => harness::write_csv(&result, &mut sink)?,
                Format::Json => {
                    serde_json::to_writer_pretty(&mut sink, &result)?;
                    writeln!(sink)?;
                }
            }
            sink.flush()?;
            let violations = result.violations();
            if !violations.is_empty() {
                bail!("{} trial(s) certified benign but not recovered", violations.len());
            }
            Ok(0)
        }
    }
}
