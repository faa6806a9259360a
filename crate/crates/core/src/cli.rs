//! Command-line driver: one subcommand per experiment, a JSON config per run,
//! and a manifest of every emitted file with its SHA-256.
//!
//! Exit codes: 0 success, 2 invalid config, 3 solver failure (partial outputs
//! and `failure.json` are kept), 4 IO error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::eigen::{first_eigenpair, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::Error;
use crate::experiments::{
    barrier_check, comparison_check, compute_barrier_constants, default_slack, gamma_sweep,
    summability_sweep, uniqueness_check, SigmaRule,
};
use crate::finsler::{check_assumptions, verify_vector_inequalities, FinslerSpec};
use crate::grid::{build_grid, DiscreteField, Domain, Grid};
use crate::singular::{default_schedule, solve_continuation, solve_regularized, ProblemSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "singular-plap", version, about = "Anisotropic p-Laplacian experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config for the subcommand.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for sweeps; 1 is bit-reproducible.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Overrides the eigen and comparison tolerances.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Empirical ellipticity constants and vector inequalities of a norm.
    CheckNorm(Common),
    /// First eigenpair.
    Eigen(Common),
    /// One regularized solve.
    Solve(Common),
    /// Continuation over a schedule of epsilon.
    Continuation(Common),
    /// Barrier constants and sandwich check.
    Barrier(Common),
    /// Comparison of two data sets, optionally with the uniqueness paths.
    Compare(Common),
    /// Continuation for several gamma.
    SweepGamma(Common),
    /// Continuation for several summability exponents m.
    SweepM(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::CheckNorm(c)
            | Command::Eigen(c)
            | Command::Solve(c)
            | Command::Continuation(c)
            | Command::Barrier(c)
            | Command::Compare(c)
            | Command::SweepGamma(c)
            | Command::SweepM(c) => c,
        }
    }
}

/// Subcommand names paired with the JSON schema of their config.
pub fn config_schemas() -> Vec<(&'static str, Value)> {
    fn of<T: JsonSchema>() -> Value {
        schemars::schema_for!(T).to_value()
    }
    vec![
        ("check-norm", of::<CheckNormConfig>()),
        ("eigen", of::<EigenConfig>()),
        ("solve", of::<SolveConfig>()),
        ("continuation", of::<ContinuationConfig>()),
        ("barrier", of::<BarrierConfig>()),
        ("compare", of::<CompareConfig>()),
        ("sweep-gamma", of::<SweepGammaConfig>()),
        ("sweep-m", of::<SweepMConfig>()),
    ]
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CheckNormConfig {
    pub norm: FinslerSpec,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_p_values")]
    pub p_values: Vec<f64>,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
}

fn default_samples() -> usize {
    10_000
}
fn default_pairs() -> usize {
    100_000
}
fn default_p_values() -> Vec<f64> {
    vec![1.5, 2.0, 3.0]
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct EigenConfig {
    pub domain: Domain,
    pub resolution: Vec<usize>,
    pub norm: FinslerSpec,
    pub p: f64,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub problem: ProblemSpec,
    pub epsilon: f64,
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ContinuationConfig {
    pub problem: ProblemSpec,
    pub schedule: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct BarrierConfig {
    pub problem: ProblemSpec,
    pub schedule: Option<Vec<f64>>,
    /// Width of the boundary strip in the constants (default 0.1).
    pub strip_width: Option<f64>,
    /// In units of the mesh size.
    #[serde(default = "two")]
    pub exclusion_h: f64,
    #[serde(default = "four")]
    pub corner_h: f64,
    /// Absolute slack; default `5·h·‖u‖∞`.
    pub slack: Option<f64>,
    pub t: Option<f64>,
}

fn two() -> f64 {
    2.0
}
fn four() -> f64 {
    4.0
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub problem1: ProblemSpec,
    pub problem2: ProblemSpec,
    pub epsilon: f64,
    #[serde(default)]
    pub uniqueness: bool,
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SweepGammaConfig {
    pub problem: ProblemSpec,
    pub gammas: Vec<f64>,
    pub schedule: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct SweepMConfig {
    pub problem: ProblemSpec,
    pub m_values: Vec<f64>,
    pub delta: f64,
    pub schedule: Option<Vec<f64>>,
}

/// Writes files as they are produced and remembers them for the manifest.
/// Nothing touches the output directory before the first file.
struct Outputs {
    dir: PathBuf,
    written: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        }
    }

    fn put(&mut self, name: &str, bytes: Vec<u8>) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        fs::write(self.dir.join(name), &bytes)?;
        self.written.push((name.to_string(), bytes));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        self.put(name, bytes)
    }

    fn field(&mut self, name: &str, grid: &Grid, u: &DiscreteField) -> std::io::Result<()> {
        let mut buf = Vec::new();
        u.write_csv(grid, &mut buf).map_err(std::io::Error::other)?;
        self.put(name, buf)
    }

    fn manifest(&mut self) -> std::io::Result<()> {
        let files: Vec<Value> = self
            .written
            .iter()
            .map(|(name, bytes)| {
                json!({
                    "path": name,
                    "bytes": bytes.len(),
                    "sha256": hex::encode(Sha256::digest(bytes)),
                })
            })
            .collect();
        let mut bytes = serde_json::to_vec_pretty(&json!({ "files": files }))?;
        bytes.push(b'\n');
        fs::create_dir_all(&self.dir)?;
        fs::write(self.dir.join("manifest.json"), bytes)
    }
}

enum Failure {
    Schema(String),
    Solver(Error),
    Io(std::io::Error),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(io) => Failure::Io(io),
            Error::InvalidParameter(_)
            | Error::InvalidNorm(_)
            | Error::InvalidGrid(_)
            | Error::DimensionMismatch { .. }
            | Error::MismatchedGrid { .. }
            | Error::Hypothesis(_)
            | Error::Json(_) => Failure::Schema(e.to_string()),
            other => Failure::Solver(other),
        }
    }
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::Schema(format!("{}: {e}", path.display())))
}

fn eigen_tol(common: &Common) -> f64 {
    common.tol.unwrap_or(DEFAULT_TOL)
}

fn schedule_or_default(s: Option<Vec<f64>>) -> Vec<f64> {
    s.unwrap_or_else(default_schedule)
}

fn check_schedule(s: &[f64]) -> Result<(), Failure> {
    if s.is_empty() || s.iter().any(|e| !(*e > 0.0)) || s.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Failure::Schema(
            "schedule must be nonempty, positive and strictly decreasing".into(),
        ));
    }
    Ok(())
}

fn problem_grid(problem: &ProblemSpec) -> Result<Grid, Failure> {
    problem.validate()?;
    Ok(problem.grid()?)
}

fn execute(cmd: &Command, out: &mut Outputs) -> Result<(), Failure> {
    let common = cmd.common();
    match cmd {
        Command::CheckNorm(_) => {
            let cfg: CheckNormConfig = parse(&common.config)?;
            if cfg.p_values.iter().any(|p| !(*p > 1.0)) {
                return Err(Failure::Schema("p_values must exceed 1".into()));
            }
            let assumptions = check_assumptions(&cfg.norm, cfg.samples, common.seed)?;
            let inequalities = cfg
                .p_values
                .iter()
                .map(|&p| verify_vector_inequalities(&cfg.norm, p, cfg.pairs, common.seed))
                .collect::<Result<Vec<_>, Error>>()?;
            out.json(
                "report.json",
                &json!({ "assumptions": assumptions, "inequalities": inequalities }),
            )?;
        }
        Command::Eigen(_) => {
            let cfg: EigenConfig = parse(&common.config)?;
            let grid = build_grid(cfg.domain, &cfg.resolution)?;
            grid.check_norm(&cfg.norm)?;
            crate::finsler::check_p(cfg.p)?;
            let rep = first_eigenpair(
                &grid,
                &cfg.norm,
                cfg.p,
                eigen_tol(common),
                cfg.max_iter.unwrap_or(DEFAULT_MAX_ITER),
            )?;
            out.json("report.json", &rep)?;
            out.field("phi1.csv", &grid, &rep.phi1)?;
        }
        Command::Solve(_) => {
            let cfg: SolveConfig = parse(&common.config)?;
            let grid = problem_grid(&cfg.problem)?;
            if !(cfg.epsilon > 0.0) {
                return Err(Failure::Schema("epsilon must be positive".into()));
            }
            let rep = solve_regularized(&cfg.problem, &grid, cfg.epsilon, None)?;
            out.json("report.json", &rep)?;
            out.field("u.csv", &grid, &rep.u)?;
            if !rep.converged {
                return Err(Failure::Solver(Error::NonConvergence {
                    what: "regularized Newton",
                    iterations: rep.newton_iters,
                    residual: rep.final_residual,
                }));
            }
        }
        Command::Continuation(_) => {
            let cfg: ContinuationConfig = parse(&common.config)?;
            let grid = problem_grid(&cfg.problem)?;
            let schedule = schedule_or_default(cfg.schedule);
            check_schedule(&schedule)?;
            match solve_continuation(&cfg.problem, &grid, &schedule) {
                Ok(rep) => {
                    out.json("report.json", &rep)?;
                    out.put("seminorms.csv", continuation_csv(&rep))?;
                    out.field("u.csv", &grid, &rep.last().expect("nonempty").u)?;
                }
                Err(Error::ContinuationAborted { epsilon, reason, partial }) => {
                    out.json("report.json", &*partial)?;
                    out.put("seminorms.csv", continuation_csv(&partial))?;
                    return Err(Failure::Solver(Error::ContinuationAborted {
                        epsilon,
                        reason,
                        partial,
                    }));
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::Barrier(_) => {
            let cfg: BarrierConfig = parse(&common.config)?;
            let grid = problem_grid(&cfg.problem)?;
            let schedule = schedule_or_default(cfg.schedule);
            check_schedule(&schedule)?;
            let cont = solve_continuation(&cfg.problem, &grid, &schedule)?;
            let u = &cont.last().expect("nonempty").u;
            out.field("u.csv", &grid, u)?;
            let eig = first_eigenpair(&grid, &cfg.problem.norm, cfg.problem.p, eigen_tol(common), DEFAULT_MAX_ITER)?;
            let constants = compute_barrier_constants(
                &eig,
                &cfg.problem,
                &grid,
                u,
                cfg.strip_width.unwrap_or(0.1),
                cfg.corner_h * grid.h,
                cfg.t,
            )?;
            let slack = cfg.slack.unwrap_or_else(|| default_slack(&grid, u));
            let check = barrier_check(
                &grid,
                u,
                &eig.phi1,
                &constants,
                slack,
                cfg.exclusion_h * grid.h,
                cfg.corner_h * grid.h,
            )?;
            out.json(
                "report.json",
                &json!({ "eigen": eig, "constants": constants, "check": check }),
            )?;
            out.field("phi1.csv", &grid, &eig.phi1)?;
        }
        Command::Compare(_) => {
            let cfg: CompareConfig = parse(&common.config)?;
            let grid = problem_grid(&cfg.problem1)?;
            problem_grid(&cfg.problem2)?;
            if cfg.problem1.resolution != cfg.problem2.resolution {
                return Err(Failure::Schema("problems must share the resolution".into()));
            }
            let tol = common.tol.unwrap_or(1e-8);
            let cmp = comparison_check(&cfg.problem1, &cfg.problem2, &grid, cfg.epsilon, tol)?;
            let uniq = if cfg.uniqueness {
                Some(uniqueness_check(&cfg.problem1, &grid, cfg.epsilon)?)
            } else {
                None
            };
            out.json("report.json", &json!({ "comparison": cmp, "uniqueness": uniq }))?;
        }
        Command::SweepGamma(_) => {
            let cfg: SweepGammaConfig = parse(&common.config)?;
            let grid = problem_grid(&cfg.problem)?;
            let schedule = schedule_or_default(cfg.schedule);
            check_schedule(&schedule)?;
            let rep = in_pool(common.threads, || gamma_sweep(&cfg.problem, &grid, &cfg.gammas, &schedule))??;
            out.json("report.json", &rep)?;
            let mut csv = Vec::new();
            rep.write_csv(&mut csv)?;
            out.put("sweep.csv", csv)?;
        }
        Command::SweepM(_) => {
            let cfg: SweepMConfig = parse(&common.config)?;
            let grid = problem_grid(&cfg.problem)?;
            let schedule = schedule_or_default(cfg.schedule);
            check_schedule(&schedule)?;
            let rule = SigmaRule { delta: cfg.delta };
            let rep = in_pool(common.threads, || {
                summability_sweep(&cfg.problem, &grid, &cfg.m_values, rule, &schedule)
            })??;
            out.json("report.json", &rep)?;
            let mut csv = Vec::new();
            rep.write_csv(&mut csv)?;
            out.put("sweep.csv", csv)?;
        }
    }
    Ok(())
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Schema(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn continuation_csv(rep: &crate::singular::ContinuationReport) -> Vec<u8> {
    let mut s = String::from("epsilon,seminorm,newton_iters,final_residual,min_u_interior\n");
    for st in &rep.steps {
        s.push_str(&format!(
            "{:e},{},{},{:e},{:e}\n",
            st.epsilon, st.seminorm, st.newton_iters, st.final_residual, st.min_u_interior
        ));
    }
    s.into_bytes()
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_SCHEMA } else { EXIT_OK };
        }
    };
    run_command(&cli.command)
}

pub fn run_command(cmd: &Command) -> i32 {
    let common = cmd.common();
    if common.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return EXIT_SCHEMA;
    }
    if let Some(t) = common.tol {
        if !(t > 0.0) {
            eprintln!("error: --tol must be positive");
            return EXIT_SCHEMA;
        }
    }
    let mut out = Outputs::new(&common.out);
    let result = execute(cmd, &mut out);
    let code = match &result {
        Ok(()) => EXIT_OK,
        Err(Failure::Schema(msg)) => {
            eprintln!("error: invalid config: {msg}");
            return EXIT_SCHEMA;
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
        Err(Failure::Solver(e)) => {
            eprintln!("error: solver failed: {e}");
            if let Err(io) = out.json("failure.json", &json!({ "error": e.to_string() })) {
                eprintln!("error: {io}");
                return EXIT_IO;
            }
            EXIT_SOLVER
        }
    };
    match out.manifest() {
        Ok(()) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_IO
        }
    }
}
