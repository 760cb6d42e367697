//! Batch front-end: flag and config-file parsing, orchestration, output files.
//!
//! Every subcommand writes `result.json` into the output directory; some add
//! `table.csv`, `u.pgm`/`s.pgm` (with `--images`) or `operator.mtx`.
//! Exit codes: 0 success, 2 configuration error, 3 non-convergence, 1 other
//! failures.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{check_positivity, check_radial, compare_bc, cross_validate_disk, sweep, DiskParams, SweepParameter};
use crate::bathtub::Indicator;
use crate::eigen::EigenConfig;
use crate::error::{Error, Result};
use crate::exec::init_threads;
use crate::grid::{Domain, DomainKind, Grid};
use crate::operator::BoundaryCondition;
use crate::optimize::{
    cp_to_g, find_alpha_bar, g_lambda_from_theta, solve_cp, solve_g, AlphaBarResult, CpParams, FixedPointConfig, GParams,
    OptimalPair, Problem, SolverConfig,
};

pub const SCHEMA: u32 = 1;
pub const THREADS_ENV: &str = "PLATE_FORGE_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

const CONFIG_KEYS: &[&str] = &[
    "domain", "n", "bc", "tol", "eigen_tol", "restarts", "seed", "max_outer", "out", "images", "alpha", "area", "low", "high",
    "mass", "param", "from", "to", "points", "fp_tol", "n1d", "n2d",
];

#[derive(Parser, Debug)]
#[command(name = "plate-forge", version, about = "Optimal two-material plates: eigenvalue optimization on the square and the disk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimize λ₁(Δ² + α χ_S) over regions S of measure A.
    #[command(allow_negative_numbers = true)]
    SolveG(GArgs),
    /// Minimize the fundamental frequency over densities h ≤ ρ ≤ H of mass M.
    #[command(allow_negative_numbers = true)]
    SolveCp(CpArgs),
    /// Fixed point α = Λ(α, A).
    #[command(allow_negative_numbers = true)]
    AlphaBar(AlphaBarArgs),
    /// Λ(α, A) over a range of α or A.
    #[command(allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Composite problem under hinged and clamped edges.
    #[command(allow_negative_numbers = true)]
    CompareBc(CpArgs),
    /// Radial solver against the Cartesian disk.
    #[command(allow_negative_numbers = true)]
    CrossValidate(CrossArgs),
    /// Write the assembled operator in Matrix Market format.
    DumpOperator(DumpArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, value_enum)]
    domain: Option<DomainArg>,
    /// Cells per side (radial cells on the radial grid).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum)]
    bc: Option<BcArg>,
    /// Relative change of the objective between outer iterations.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    eigen_tol: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_outer: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write u.pgm and s.pgm.
    #[arg(long)]
    images: bool,
}

#[derive(Args, Debug, Clone)]
struct GArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    area: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct CpArgs {
    #[command(flatten)]
    common: Common,
    /// Light density h.
    #[arg(long)]
    low: Option<f64>,
    /// Heavy density H.
    #[arg(long)]
    high: Option<f64>,
    /// Total mass M.
    #[arg(long)]
    mass: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct AlphaBarArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    area: Option<f64>,
    #[arg(long)]
    fp_tol: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    param: Option<ParamArg>,
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Fixed α for area sweeps.
    #[arg(long)]
    alpha: Option<f64>,
    /// Fixed A for α sweeps.
    #[arg(long)]
    area: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct CrossArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n1d: Option<usize>,
    #[arg(long)]
    n2d: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    area: Option<f64>,
    #[arg(long)]
    low: Option<f64>,
    #[arg(long)]
    high: Option<f64>,
    #[arg(long)]
    mass: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct DumpArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DomainArg {
    Square,
    Disk,
    Radial,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BcArg {
    Navier,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ParamArg {
    Alpha,
    Area,
}

macro_rules! value_enum_from_str {
    ($($t:ty),*) => {$(
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                <$t as ValueEnum>::from_str(s, true)
            }
        }
    )*};
}
value_enum_from_str!(DomainArg, BcArg, ParamArg);

impl From<DomainArg> for DomainKind {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Square => DomainKind::UnitSquare,
            DomainArg::Disk => DomainKind::UnitDisk,
            DomainArg::Radial => DomainKind::RadialDisk,
        }
    }
}

impl From<BcArg> for BoundaryCondition {
    fn from(b: BcArg) -> Self {
        match b {
            BcArg::Navier => BoundaryCondition::Navier,
            BcArg::Dirichlet => BoundaryCondition::Dirichlet,
        }
    }
}

/// Parses a flat `key=value` file; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (line_no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("config line {}: expected key=value", line_no + 1)))?;
        let key = key.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::config(format!("config line {}: unknown key '{key}'", line_no + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::config(format!("cannot read config {}: {e}", p.display())))?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };
        Ok(Settings { file })
    }

    fn get<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(v) => v.parse().map(Some).map_err(|e| Error::config(format!("config key '{key}': {e}"))),
            None => Ok(None),
        }
    }

    fn or<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key, flag)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key, flag)?.ok_or_else(|| Error::config(format!("missing required --{}", key.replace('_', "-"))))
    }
}

/// Settings echoed into `result.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: DomainKind,
    pub n: usize,
    pub bc: BoundaryCondition,
    pub solver: SolverConfig,
    /// Subcommand parameters.
    pub params: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema: u32,
    pub command: String,
    pub config: RunConfig,
    /// `|Ω|_h`.
    pub total_measure: f64,
    pub lambda: Option<f64>,
    pub t: Option<f64>,
    #[serde(rename = "area_S")]
    pub area_s: Option<f64>,
    pub iterations: Option<usize>,
    pub residual: Option<f64>,
    pub converged: bool,
    pub diagnostics: Value,
    /// Excluded from reproducibility comparisons.
    pub wall_time_s: f64,
}

impl ResultRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }
}

struct Context {
    command: &'static str,
    domain: Domain,
    bc: BoundaryCondition,
    solver: SolverConfig,
    out: PathBuf,
    images: bool,
    params: BTreeMap<String, Value>,
}

impl Context {
    fn new(command: &'static str, common: &Common) -> Result<(Self, Settings)> {
        let s = Settings::load(common.config.as_deref())?;
        let kind: DomainKind = s.or("domain", common.domain, DomainArg::Square)?.into();
        let n = s.or("n", common.n, 64)?;
        let bc: BoundaryCondition = s.or("bc", common.bc, BcArg::Navier)?.into();
        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            eigen: EigenConfig { tol: s.or("eigen_tol", common.eigen_tol, defaults.eigen.tol)?, ..defaults.eigen },
            outer_tol: s.or("tol", common.tol, defaults.outer_tol)?,
            max_outer: s.or("max_outer", common.max_outer, defaults.max_outer)?,
            restarts: s.or("restarts", common.restarts, defaults.restarts)?,
            seed: s.or("seed", common.seed, defaults.seed)?,
            ..defaults
        };
        if !(solver.eigen.tol > 0.0) {
            return Err(Error::config("--eigen-tol must be positive"));
        }
        let out = s.or("out", common.out.clone(), PathBuf::from("."))?;
        let images = common.images || s.or("images", None, false)?;
        let ctx = Context { command, domain: Domain::new(kind, n), bc, solver, out, images, params: BTreeMap::new() };
        Ok((ctx, s))
    }

    fn param(&mut self, key: &str, value: impl Serialize) {
        self.params.insert(key.to_string(), serde_json::to_value(value).expect("parameter serializes"));
    }

    fn record(&self, total_measure: f64) -> ResultRecord {
        ResultRecord {
            schema: SCHEMA,
            command: self.command.to_string(),
            config: RunConfig { domain: self.domain.kind, n: self.domain.n, bc: self.bc, solver: self.solver, params: self.params.clone() },
            total_measure,
            lambda: None,
            t: None,
            area_s: None,
            iterations: None,
            residual: None,
            converged: true,
            diagnostics: Value::Null,
            wall_time_s: 0.0,
        }
    }
}

/// Everything a subcommand produces; written to disk by [`run`].
struct Outcome {
    record: ResultRecord,
    files: Vec<(&'static str, Vec<u8>)>,
    summary: String,
    out: PathBuf,
}

impl Outcome {
    fn exit_code(&self) -> i32 {
        if self.record.converged {
            EXIT_OK
        } else {
            EXIT_NOT_CONVERGED
        }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Dimension { .. } | Error::DegenerateWeight(_) => EXIT_CONFIG,
        Error::EigenNotConverged(_) | Error::NotConverged(_) | Error::FixedPointNotConverged(_) => EXIT_NOT_CONVERGED,
        Error::Factorization { .. } | Error::Io(_) => EXIT_FAILURE,
    }
}

fn apply_thread_cap() -> Result<()> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let threads: usize = raw.trim().parse().map_err(|_| Error::config(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
        if threads == 0 {
            return Err(Error::config(format!("{THREADS_ENV} must be at least 1")));
        }
        init_threads(threads);
    }
    Ok(())
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Err(e) = apply_thread_cap() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let start = Instant::now();
    let outcome = match dispatch(cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let mut record = outcome.record.clone();
    record.wall_time_s = start.elapsed().as_secs_f64();
    if let Err(e) = write_outputs(&outcome.out, &record, &outcome.files) {
        eprintln!("error: {e}");
        return EXIT_FAILURE;
    }
    print!("{}", outcome.summary);
    if !record.converged {
        eprintln!("warning: solver did not converge; best iterate written");
    }
    outcome.exit_code()
}

fn write_outputs(dir: &Path, record: &ResultRecord, files: &[(&'static str, Vec<u8>)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("result.json"), record.to_json())?;
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<Outcome> {
    match command {
        Command::SolveG(a) => cmd_solve_g(a),
        Command::SolveCp(a) => cmd_solve_cp(a),
        Command::AlphaBar(a) => cmd_alpha_bar(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::CompareBc(a) => cmd_compare_bc(a),
        Command::CrossValidate(a) => cmd_cross_validate(a),
        Command::DumpOperator(a) => cmd_dump_operator(a),
    }
}

/// Splits a solver result into the pair and its convergence flag.
fn settle(result: Result<OptimalPair>) -> Result<(OptimalPair, bool)> {
    match result {
        Ok(p) => Ok((p, true)),
        Err(Error::NotConverged(p)) => Ok((*p, false)),
        Err(e) => Err(e),
    }
}

fn fill_pair(record: &mut ResultRecord, pair: &OptimalPair, grid: &Grid, converged: bool) {
    record.lambda = Some(pair.eigenvalue);
    record.t = Some(pair.indicator.threshold);
    record.area_s = Some(pair.indicator.measure(grid));
    record.iterations = Some(pair.iterations);
    record.residual = Some(pair.residual);
    record.converged = converged;
}

fn pair_diagnostics(problem: &Problem, pair: &OptimalPair) -> Result<Value> {
    let mut d = json!({
        "restart": pair.restart,
        "history": pair.history,
        "max_ascent": pair.max_ascent(),
        "tie_band": pair.indicator.tie_band,
        "tie_fraction": pair.indicator.tie_fraction,
        "positivity": check_positivity(&problem.grid, &pair.u)?,
    });
    if problem.grid.kind().is_disk() {
        let mut sym = serde_json::to_value(check_radial(&problem.grid, &pair.u, &pair.indicator)?).expect("report serializes");
        if let Some(obj) = sym.as_object_mut() {
            obj.remove("profile");
        }
        d["symmetry"] = sym;
    }
    Ok(d)
}

fn image_files(ctx: &Context, grid: &Grid, u: &[f64], indicator: &Indicator) -> Vec<(&'static str, Vec<u8>)> {
    if !ctx.images {
        return Vec::new();
    }
    vec![("u.pgm", render_field(grid, u)), ("s.pgm", render_indicator(grid, indicator))]
}

fn summary_line(ctx: &Context, record: &ResultRecord) -> String {
    let mut s = format!("{} {:?} n={} {:?}", ctx.command, ctx.domain.kind, ctx.domain.n, ctx.bc);
    if let Some(l) = record.lambda {
        let _ = write!(s, " lambda={l:.10}");
    }
    if let Some(a) = record.area_s {
        let _ = write!(s, " area_S={a:.6}");
    }
    if let Some(i) = record.iterations {
        let _ = write!(s, " iterations={i}");
    }
    s.push('\n');
    s
}

fn cmd_solve_g(a: GArgs) -> Result<Outcome> {
    let (mut ctx, s) = Context::new("solve-g", &a.common)?;
    let params = GParams { alpha: s.require("alpha", a.alpha)?, area: s.require("area", a.area)? };
    ctx.param("alpha", params.alpha);
    ctx.param("area", params.area);
    let problem = Problem::new(ctx.domain, ctx.bc)?;
    let (pair, converged) = settle(solve_g(&problem, params, &ctx.solver))?;
    let mut record = ctx.record(problem.total_measure());
    fill_pair(&mut record, &pair, &problem.grid, converged);
    record.diagnostics = pair_diagnostics(&problem, &pair)?;
    let summary = summary_line(&ctx, &record);
    let files = image_files(&ctx, &problem.grid, &pair.u, &pair.indicator);
    Ok(Outcome { record, files, summary, out: ctx.out })
}

fn cp_params(s: &Settings, low: Option<f64>, high: Option<f64>, mass: Option<f64>) -> Result<CpParams> {
    Ok(CpParams { low: s.require("low", low)?, high: s.require("high", high)?, mass: s.require("mass", mass)? })
}

fn cmd_solve_cp(a: CpArgs) -> Result<Outcome> {
    let (mut ctx, s) = Context::new("solve-cp", &a.common)?;
    let params = cp_params(&s, a.low, a.high, a.mass)?;
    ctx.param("low", params.low);
    ctx.param("high", params.high);
    ctx.param("mass", params.mass);
    let problem = Problem::new(ctx.domain, ctx.bc)?;
    let total = problem.total_measure();
    let (pair, converged) = settle(solve_cp(&problem, params, &ctx.solver))?;
    let mut record = ctx.record(total);
    fill_pair(&mut record, &pair, &problem.grid, converged);
    let mut d = pair_diagnostics(&problem, &pair)?;
    let g = cp_to_g(&params, pair.eigenvalue, total);
    let density = pair.density.as_deref().unwrap_or_default();
    let mass: f64 = density.iter().zip(&problem.grid.cell_measure).map(|(r, m)| r * m).sum();
    d["equivalent_g"] = json!({
        "alpha": g.alpha,
        "area": g.area,
        "lambda": g_lambda_from_theta(pair.eigenvalue, params.high),
    });
    d["mass"] = json!(mass);
    record.diagnostics = d;
    let summary = summary_line(&ctx, &record);
    let files = image_files(&ctx, &problem.grid, &pair.u, &pair.indicator);
    Ok(Outcome { record, files, summary, out: ctx.out })
}

fn alpha_bar_table(r: &AlphaBarResult) -> String {
    let mut out = String::from("k,alpha,lambda,step,ratio\n");
    let mut prev_step: Option<f64> = None;
    for (k, it) in r.iterates.iter().enumerate() {
        let step = (it.lambda - it.alpha).abs();
        let ratio = prev_step.map(|p| step / p).map_or(String::new(), |x| x.to_string());
        let _ = writeln!(out, "{k},{},{},{},{ratio}", it.alpha, it.lambda, step);
        prev_step = Some(step);
    }
    out
}

fn cmd_alpha_bar(a: AlphaBarArgs) -> Result<Outcome> {
    let (mut ctx, s) = Context::new("alpha-bar", &a.common)?;
    let area = s.require("area", a.area)?;
    let fixed = FixedPointConfig { tol: s.or("fp_tol", a.fp_tol, FixedPointConfig::default().tol)?, ..FixedPointConfig::default() };
    if !(fixed.tol > 0.0) {
        return Err(Error::config("--fp-tol must be positive"));
    }
    ctx.param("area", area);
    ctx.param("fp_tol", fixed.tol);
    let problem = Problem::new(ctx.domain, ctx.bc)?;
    let (result, pair) = match find_alpha_bar(&problem, area, &ctx.solver, &fixed) {
        Ok((r, p)) => (r, Some(p)),
        Err(Error::FixedPointNotConverged(r)) => (*r, None),
        Err(e) => return Err(e),
    };
    let mut record = ctx.record(problem.total_measure());
    record.lambda = Some(result.alpha_bar);
    record.converged = result.converged;
    record.iterations = Some(result.iterates.len());
    if let Some(p) = &pair {
        record.t = Some(p.indicator.threshold);
        record.area_s = Some(p.indicator.measure(&problem.grid));
        record.residual = Some(p.residual);
    }
    record.diagnostics = json!({
        "alpha_bar": result.alpha_bar,
        "mu": result.mu,
        "defect": result.defect,
        "lipschitz_bound": result.lipschitz_bound,
        "observed_ratio": result.observed_ratio(1e-7),
        "iterates": result.iterates,
        "ratios": result.ratios,
    });
    let table = alpha_bar_table(&result);
    let mut summary = format!("alpha_bar = {:.12}\n", result.alpha_bar);
    let _ = writeln!(summary, "{:>3} {:>20} {:>20} {:>12} {:>10}", "k", "alpha", "lambda", "step", "ratio");
    for line in table.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let num = |s: &str| s.parse::<f64>().ok();
        let _ = writeln!(
            summary,
            "{:>3} {:>20.12} {:>20.12} {:>12.3e} {:>10}",
            f[0],
            num(f[1]).unwrap_or(f64::NAN),
            num(f[2]).unwrap_or(f64::NAN),
            num(f[3]).unwrap_or(f64::NAN),
            num(f[4]).map_or(String::from("-"), |r| format!("{r:.6}"))
        );
    }
    let mut files = vec![("table.csv", table.into_bytes())];
    if let Some(p) = &pair {
        files.extend(image_files(&ctx, &problem.grid, &p.u, &p.indicator));
    }
    Ok(Outcome { record, files, summary, out: ctx.out })
}

fn cmd_sweep(a: SweepArgs) -> Result<Outcome> {
    let (mut ctx, s) = Context::new("sweep", &a.common)?;
    let param = s.or("param", a.param, ParamArg::Alpha)?;
    let from: f64 = s.require("from", a.from)?;
    let to: f64 = s.require("to", a.to)?;
    let points = s.or("points", a.points, 6)?;
    if points < 3 {
        return Err(Error::config("--points must be at least 3"));
    }
    let (parameter, fixed) = match param {
        ParamArg::Alpha => (SweepParameter::Alpha, s.require("area", a.area)?),
        ParamArg::Area => (SweepParameter::Area, s.require("alpha", a.alpha)?),
    };
    ctx.param("param", parameter);
    ctx.param("from", from);
    ctx.param("to", to);
    ctx.param("points", points);
    ctx.param("fixed", fixed);
    let values: Vec<f64> = (0..points).map(|k| from + (to - from) * k as f64 / (points - 1) as f64).collect();
    let problem = Problem::new(ctx.domain, ctx.bc)?;
    let table = sweep(&problem, parameter, &values, fixed, &ctx.solver)?;
    let mut record = ctx.record(problem.total_measure());
    record.iterations = Some(table.rows.iter().map(|r| r.iterations).sum());
    record.diagnostics = serde_json::to_value(&table).expect("table serializes");
    let csv = table.to_csv();
    let mut summary = csv.clone();
    let _ = writeln!(summary, "increasing={} non_decreasing={}", table.increasing, table.non_decreasing);
    if let (Some(slope), Some(bound)) = (table.max_slope, table.lipschitz_bound) {
        let _ = writeln!(summary, "max_slope={slope:.6} lipschitz_bound={bound:.6} gap_decreasing={:?}", table.gap_decreasing.unwrap_or(false));
    }
    Ok(Outcome { record, files: vec![("table.csv", csv.into_bytes())], summary, out: ctx.out })
}

fn cmd_compare_bc(a: CpArgs) -> Result<Outcome> {
    let (mut ctx, s) = Context::new("compare-bc", &a.common)?;
    let params = cp_params(&s, a.low, a.high, a.mass)?;
    ctx.param("low", params.low);
    ctx.param("high", params.high);
    ctx.param("mass", params.mass);
    let total = crate::grid::build_grid(ctx.domain)?.total_measure;
    let cmp = compare_bc(ctx.domain, params, &ctx.solver)?;
    let mut record = ctx.record(total);
    record.diagnostics = json!({
        "theta_navier": cmp.theta_navier,
        "theta_dirichlet": cmp.theta_dirichlet,
        "difference": cmp.difference,
        "ratio": cmp.ratio,
        "iterations": [cmp.navier.iterations, cmp.dirichlet.iterations],
    });
    let summary = format!(
        "theta_navier={:.10} theta_dirichlet={:.10} difference={:.10} ratio={:.6}\n",
        cmp.theta_navier, cmp.theta_dirichlet, cmp.difference, cmp.ratio
    );
    let csv = format!("bc,theta,iterations\nnavier,{},{}\ndirichlet,{},{}\n", cmp.theta_navier, cmp.navier.iterations, cmp.theta_dirichlet, cmp.dirichlet.iterations);
    Ok(Outcome { record, files: vec![("table.csv", csv.into_bytes())], summary, out: ctx.out })
}

fn cmd_cross_validate(a: CrossArgs) -> Result<Outcome> {
    let (mut ctx, s) = Context::new("cross-validate", &a.common)?;
    let n1d = s.or("n1d", a.n1d, 400)?;
    let n2d = s.or("n2d", a.n2d, 64)?;
    let g = (s.get("alpha", a.alpha)?, s.get("area", a.area)?);
    let cp = (s.get("low", a.low)?, s.get("high", a.high)?, s.get("mass", a.mass)?);
    let params = match (g, cp) {
        ((Some(alpha), Some(area)), (None, None, None)) => DiskParams::G(GParams { alpha, area }),
        ((None, None), (Some(low), Some(high), Some(mass))) => DiskParams::Cp(CpParams { low, high, mass }),
        _ => return Err(Error::config("give either --alpha and --area, or --low, --high and --mass")),
    };
    ctx.domain = Domain::radial(n1d);
    ctx.param("n1d", n1d);
    ctx.param("n2d", n2d);
    ctx.param("problem", params);
    let report = cross_validate_disk(params, ctx.bc, n1d, n2d, &ctx.solver)?;
    let mut record = ctx.record(std::f64::consts::PI);
    record.lambda = Some(report.eigenvalue_1d);
    let mut d = serde_json::to_value(&report).expect("report serializes");
    if let Some(sym) = d.get_mut("symmetry").and_then(Value::as_object_mut) {
        sym.remove("profile");
    }
    record.diagnostics = d;
    let summary = format!(
        "eigenvalue_1d={:.10} eigenvalue_2d={:.10} gap={:.3e} profile_gap={:.3e} annulus_mismatch_2d={:.4e}\n",
        report.eigenvalue_1d, report.eigenvalue_2d, report.eigenvalue_gap, report.profile_gap, report.annulus_mismatch_2d
    );
    Ok(Outcome { record, files: Vec::new(), summary, out: ctx.out })
}

fn cmd_dump_operator(a: DumpArgs) -> Result<Outcome> {
    let (ctx, _) = Context::new("dump-operator", &a.common)?;
    let problem = Problem::new(ctx.domain, ctx.bc)?;
    let k = &problem.op.stiffness;
    let mut mtx = Vec::new();
    k.write_matrix_market(&mut mtx)?;
    let mut record = ctx.record(problem.total_measure());
    record.diagnostics = json!({
        "dim": k.dim(),
        "nnz": k.nnz(),
        "bandwidth": k.bandwidth(),
        "symmetry_defect": k.symmetry_defect(),
    });
    let summary = format!("operator.mtx: dim={} nnz={} bandwidth={}\n", k.dim(), k.nnz(), k.bandwidth());
    Ok(Outcome { record, files: vec![("operator.mtx", mtx)], summary, out: ctx.out })
}

/// Pixel-to-cell map: the lattice for Cartesian grids, a `2n × 2n` raster of
/// the disk for the radial grid.
fn raster(grid: &Grid) -> (usize, Vec<Option<usize>>) {
    match grid.kind() {
        DomainKind::RadialDisk => {
            let n = grid.len();
            let side = 2 * n;
            let px = 1.0 / n as f64;
            let cells = (0..side * side)
                .map(|p| {
                    let (row, col) = (p / side, p % side);
                    let x = -1.0 + (col as f64 + 0.5) * px;
                    let y = 1.0 - (row as f64 + 0.5) * px;
                    let r = x.hypot(y);
                    (r < 1.0).then(|| ((r * n as f64) as usize).min(n - 1))
                })
                .collect();
            (side, cells)
        }
        _ => {
            let side = grid.lattice_side();
            let cells = (0..side * side)
                .map(|p| {
                    let (row, col) = (p / side, p % side);
                    grid.cell_at(col as i64, (side - 1 - row) as i64)
                })
                .collect();
            (side, cells)
        }
    }
}

/// Binary PGM (P5) of a square 8-bit image.
pub fn pgm(side: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{side} {side}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// `u` scaled linearly from its minimum (0) to its maximum (255); 0 outside Ω.
pub fn render_field(grid: &Grid, u: &[f64]) -> Vec<u8> {
    let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let span = hi - lo;
    let (side, cells) = raster(grid);
    let pixels: Vec<u8> = cells
        .iter()
        .map(|c| match c {
            Some(i) if span > 0.0 => ((u[*i] - lo) / span * 255.0).round() as u8,
            _ => 0,
        })
        .collect();
    pgm(side, &pixels)
}

/// `S` as 255, its complement as 0, fractional tie cells as 128.
pub fn render_indicator(grid: &Grid, indicator: &Indicator) -> Vec<u8> {
    let (side, cells) = raster(grid);
    let pixels: Vec<u8> = cells
        .iter()
        .map(|c| match c.map(|i| indicator.fractions[i]) {
            Some(e) if e == 1.0 => 255,
            Some(e) if e > 0.0 => 128,
            _ => 0,
        })
        .collect();
    pgm(side, &pixels)
}
