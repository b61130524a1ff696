//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 degenerate data (every component's estimate degenerate).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::basis::{self, BasisKind, BasisSpec, CoefficientMatrix, SampledCurve};
use crate::diffop::Smoother;
use crate::error::{Error, Result};
use crate::functional_hp::{self, DiagonalOperator};
use crate::io::{self, fmt_f64};
use crate::model_sim::{self, AlphaGrid, ConsistencyReport, ModelParams, OptimalityReport};
use crate::scalar_hp::DEFAULT_ALPHA_MAX;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

/// Energy fraction used to pick `J` when the config leaves it unset.
const ENERGY_FRACTION: f64 = 0.995;

#[derive(Debug, Parser)]
#[command(name = "fhp", version, about = "Functional Hodrick-Prescott filtering")]
struct Cli {
    /// Structured key-value (TOML) run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "fhp-out")]
    output: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a dataset from the mixed model and write curves and ground truth.
    Simulate,
    /// Estimate the smoothing operator from a curve file.
    Estimate(InputArgs),
    /// Filter a curve file with a supplied or estimated smoothing operator.
    Filter(FilterArgs),
    /// Check that the exact risk curve is minimized at the noise-to-signal ratio.
    VerifyOptimality,
    /// Monte Carlo study of the variance and ratio estimators.
    McConsistency,
    /// Run the optimality and consistency checks together.
    Verify,
    /// Time the banded smoother against a dense solve.
    Bench,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Curve CSV (one curve per row).
    #[arg(long)]
    input: Option<PathBuf>,
    /// The first row of the input holds the grid.
    #[arg(long)]
    grid_header: bool,
}

#[derive(Debug, Args)]
struct FilterArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Smoothing operator eigenvalues, one per component.
    #[arg(long)]
    alpha_file: Option<PathBuf>,
    /// Estimate the smoothing operator from the data.
    #[arg(long)]
    estimate: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// Smoothing level used for components with a degenerate signal estimate.
    pub alpha_max: Option<f64>,
    pub basis: BasisConfig,
    pub input: InputConfig,
    pub model: Option<ModelConfig>,
    pub grid: GridConfig,
    pub mc: McConfig,
    pub bench: BenchConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisConfig {
    pub kind: BasisKind,
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    /// Grid size for simulated curves.
    pub m: usize,
    pub grid_header: bool,
    /// `m x J` evaluation matrix for the user-supplied basis.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<PathBuf>,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            kind: BasisKind::Sine,
            j: None,
            m: 256,
            grid_header: false,
            matrix: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curves: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_file: Option<PathBuf>,
    pub estimate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    pub mu: Vec<f64>,
    pub tau: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<[f64; 2]>>,
}

impl ModelConfig {
    fn params(&self, seed: u64) -> Result<ModelParams> {
        let p = ModelParams::new(self.n, self.mu.clone(), self.tau.clone(), seed)?;
        match &self.gamma {
            Some(g) => p.with_gamma(g.clone()),
            None => Ok(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            min: 0.01,
            max: 100.0,
            points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_list: Vec<usize>,
    pub reps: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_list: vec![100, 400, 1600],
            reps: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub n_list: Vec<usize>,
    pub alpha: f64,
    pub dense_max: usize,
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n_list: vec![500, 1_000, 10_000, 100_000, 1_000_000],
            alpha: 1600.0,
            dense_max: 2000,
            repeats: 3,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| Error::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.input.curves,
            &mut self.input.alpha_file,
            &mut self.basis.matrix,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn alpha_max(&self) -> f64 {
        self.alpha_max.unwrap_or(DEFAULT_ALPHA_MAX)
    }
}

/// Default model for the optimality check: `n = 30`, `alpha* = (0.25, 1, 4)`.
pub fn default_optimality_model() -> ModelConfig {
    ModelConfig {
        n: 30,
        mu: vec![0.25, 1.0, 4.0],
        tau: vec![1.0, 1.0, 1.0],
        gamma: None,
    }
}

/// Default model for the consistency study: four components with decaying
/// variances.
pub fn default_consistency_model() -> ModelConfig {
    ModelConfig {
        n: 100,
        mu: vec![1.0, 0.5, 0.25, 0.125],
        tau: vec![4.0, 2.0, 1.0, 0.5],
        gamma: None,
    }
}

/// Outcome of a command, before mapping to an exit code.
enum Outcome {
    Done,
    VerificationFailed,
    Degenerate,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    package: &'static str,
    version: &'static str,
    seed: u64,
    threads: Option<usize>,
    config_file: &'a str,
    config: &'a RunConfig,
    outputs: Vec<String>,
}

struct Context {
    cfg: RunConfig,
    out: PathBuf,
    threads: Option<usize>,
    outputs: Vec<String>,
}

impl Context {
    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn finish(&mut self, command: &str) -> Result<()> {
        let config_name = "config.toml";
        let text = toml::to_string(&self.cfg).map_err(|e| Error::Io {
            path: self.out.join(config_name),
            source: std::io::Error::other(e),
        })?;
        let cfg_path = self.path(config_name);
        std::fs::write(&cfg_path, text).map_err(|source| Error::Io {
            path: cfg_path.clone(),
            source,
        })?;
        let manifest_path = self.out.join("manifest.json");
        let mut outputs = self.outputs.clone();
        outputs.push("manifest.json".into());
        io::write_json(
            &manifest_path,
            &Manifest {
                command,
                package: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                seed: self.cfg.seed(),
                threads: self.threads,
                config_file: config_name,
                config: &self.cfg,
                outputs,
            },
        )
    }
}

/// Runs the CLI with explicit arguments (the first is the program name) and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::VerificationFailed) => EXIT_VERIFY_FAILED,
        Ok(Outcome::Degenerate) => EXIT_DEGENERATE,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

pub fn run_from_env() -> i32 {
    run(std::env::args_os())
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    cfg.seed = Some(cfg.seed());
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Argument("--threads must be >= 1".into()));
        }
        // Fails only if a pool already exists (repeated in-process runs).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let (name, apply_input): (&str, Option<&InputArgs>) = match &cli.command {
        Command::Simulate => ("simulate", None),
        Command::Estimate(a) => ("estimate", Some(a)),
        Command::Filter(a) => ("filter", Some(&a.input)),
        Command::VerifyOptimality => ("verify-optimality", None),
        Command::McConsistency => ("mc-consistency", None),
        Command::Verify => ("verify", None),
        Command::Bench => ("bench", None),
    };
    if let Some(a) = apply_input {
        if let Some(p) = &a.input {
            cfg.input.curves = Some(p.clone());
        }
        if a.grid_header {
            cfg.basis.grid_header = true;
        }
    }
    if let Command::Filter(f) = &cli.command {
        if let Some(p) = &f.alpha_file {
            cfg.input.alpha_file = Some(p.clone());
        }
        if f.estimate {
            cfg.input.estimate = true;
        }
    }
    let out = io::ensure_dir(&cli.output)?;
    let mut ctx = Context {
        cfg,
        out,
        threads: cli.threads,
        outputs: Vec::new(),
    };
    let outcome = match cli.command {
        Command::Simulate => cmd_simulate(&mut ctx)?,
        Command::Estimate(_) => cmd_estimate(&mut ctx)?,
        Command::Filter(_) => cmd_filter(&mut ctx)?,
        Command::VerifyOptimality => cmd_verify_optimality(&mut ctx)?,
        Command::McConsistency => cmd_mc_consistency(&mut ctx)?,
        Command::Verify => cmd_verify(&mut ctx)?,
        Command::Bench => cmd_bench(&mut ctx)?,
    };
    ctx.finish(name)?;
    Ok(outcome)
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}

fn write_series(
    ctx: &mut Context,
    stem: &str,
    spec: &BasisSpec,
    m: &CoefficientMatrix,
) -> Result<()> {
    let curves: Vec<Vec<f64>> = spec
        .reconstruct_series(m)?
        .into_iter()
        .map(|c| c.values)
        .collect();
    let header = ctx
        .cfg
        .basis
        .grid_header
        .then(|| spec.grid().as_slice().to_vec());
    let p = ctx.path(&format!("{stem}_curves.csv"));
    io::write_curves(&p, header.as_deref(), &curves)?;
    let p = ctx.path(&format!("{stem}_coeffs.csv"));
    io::write_matrix(&p, m)
}

#[derive(Serialize)]
struct GroundTruth<'a> {
    n: usize,
    #[serde(rename = "J")]
    j: usize,
    mu: &'a [f64],
    tau: &'a [f64],
    gamma: &'a [[f64; 2]],
    alpha_star: Vec<f64>,
    seed: u64,
    basis_kind: BasisKind,
    m: usize,
}

fn cmd_simulate(ctx: &mut Context) -> Result<Outcome> {
    let model = ctx
        .cfg
        .model
        .clone()
        .ok_or_else(|| usage("simulate needs a [model] section"))?;
    let params = model.params(ctx.cfg.seed())?;
    let j = params.components();
    if let Some(cfg_j) = ctx.cfg.basis.j {
        if cfg_j != j {
            return Err(usage(format!(
                "basis J = {cfg_j} but the model has {j} components"
            )));
        }
    }
    if ctx.cfg.basis.kind != BasisKind::Sine {
        return Err(usage("simulate supports the sine basis only"));
    }
    let spec = BasisSpec::sine(j, ctx.cfg.basis.m)?;
    let sim = model_sim::simulate(&params)?;
    for (stem, m) in [("x", &sim.x), ("y", &sim.y), ("u", &sim.u), ("v", &sim.v)] {
        write_series(ctx, stem, &spec, m)?;
    }
    let p = ctx.path("ground_truth.json");
    io::write_json(
        &p,
        &GroundTruth {
            n: params.n,
            j,
            mu: &params.mu,
            tau: &params.tau,
            gamma: &params.gamma,
            alpha_star: params.optimal_alpha(),
            seed: params.seed,
            basis_kind: spec.kind(),
            m: spec.grid_len(),
        },
    )?;
    Ok(Outcome::Done)
}

/// Reads the input curves and builds the basis they are projected on.
fn load_curves(cfg: &RunConfig) -> Result<(BasisSpec, Vec<SampledCurve>, io::CurveTable)> {
    let path = cfg
        .input
        .curves
        .as_ref()
        .ok_or_else(|| usage("no input curves (use --input or [input] curves)"))?;
    let table = io::read_curves(path, cfg.basis.grid_header)?;
    let input_err = |e: Error| Error::Input {
        path: path.clone(),
        message: e.to_string(),
    };
    let spec = match cfg.basis.kind {
        BasisKind::Sine => {
            let j = match cfg.basis.j {
                Some(j) => j,
                None => {
                    let grid = std::sync::Arc::new(table.grid.clone());
                    let curves = table
                        .rows
                        .iter()
                        .map(|r| SampledCurve::new(grid.clone(), r.clone()))
                        .collect::<Result<Vec<_>>>()
                        .map_err(input_err)?;
                    basis::select_truncation(&curves, table.grid.len() / 2, ENERGY_FRACTION)
                        .map_err(input_err)?
                }
            };
            BasisSpec::sine_on_grid(j, table.grid.clone()).map_err(input_err)?
        }
        BasisKind::UserSuppliedMatrix => {
            let mpath = cfg
                .basis
                .matrix
                .as_ref()
                .ok_or_else(|| usage("user-supplied-matrix basis needs [basis] matrix"))?;
            let rows = io::read_numeric_rows(mpath)?;
            let columns = (0..rows[0].len())
                .map(|c| rows.iter().map(|r| r[c]).collect())
                .collect();
            let spec =
                BasisSpec::from_matrix(table.grid.clone(), columns).map_err(|e| Error::Input {
                    path: mpath.clone(),
                    message: e.to_string(),
                })?;
            if let Some(j) = cfg.basis.j {
                if j != spec.truncation() {
                    return Err(usage(format!(
                        "basis J = {j} but the matrix has {} columns",
                        spec.truncation()
                    )));
                }
            }
            spec
        }
    };
    let curves = table
        .rows
        .iter()
        .map(|r| spec.curve(r.clone()))
        .collect::<Result<Vec<_>>>()
        .map_err(input_err)?;
    Ok((spec, curves, table))
}

fn cmd_estimate(ctx: &mut Context) -> Result<Outcome> {
    let (spec, curves, _) = load_curves(&ctx.cfg)?;
    let x = spec.project_series(&curves)?;
    let est = functional_hp::estimate_b(&x)?;
    let p = ctx.path("coefficients.csv");
    io::write_matrix(&p, &x)?;
    let p = ctx.path("report.json");
    io::write_json(&p, &est.report(spec.kind()))?;
    Ok(if est.all_degenerate() {
        Outcome::Degenerate
    } else {
        Outcome::Done
    })
}

fn cmd_filter(ctx: &mut Context) -> Result<Outcome> {
    let (spec, curves, table) = load_curves(&ctx.cfg)?;
    let x = spec.project_series(&curves)?;
    let alpha_max = ctx.cfg.alpha_max();
    let (result, est) = match ctx.cfg.input.alpha_file.clone() {
        Some(path) => {
            let alphas = io::read_alpha_file(&path)?;
            if alphas.len() != spec.truncation() {
                return Err(Error::Input {
                    path,
                    message: format!(
                        "has {} entries but the basis has J = {} components",
                        alphas.len(),
                        spec.truncation()
                    ),
                });
            }
            let b = DiagonalOperator::smoothing(alphas)?;
            (
                functional_hp::filter(&x, &b)?,
                functional_hp::estimate_b(&x)?,
            )
        }
        None if ctx.cfg.input.estimate => functional_hp::filter_estimated(&x, alpha_max)?,
        None => return Err(usage("filter needs --alpha-file or --estimate")),
    };
    let trend: Vec<Vec<f64>> = spec
        .reconstruct_series(&result.trend)?
        .into_iter()
        .map(|c| c.values)
        .collect();
    let residual: Vec<Vec<f64>> = table
        .rows
        .iter()
        .zip(&trend)
        .map(|(x, t)| x.iter().zip(t).map(|(a, b)| a - b).collect())
        .collect();
    let header = table.grid_header.then_some(table.grid.as_slice());
    let p = ctx.path("trend.csv");
    io::write_curves(&p, header, &trend)?;
    let p = ctx.path("residual.csv");
    io::write_curves(&p, header, &residual)?;
    let p = ctx.path("trend_coeffs.csv");
    io::write_matrix(&p, &result.trend)?;
    let p = ctx.path("applied_alpha.csv");
    io::write_curves(&p, None, std::slice::from_ref(&result.per_component_alpha))?;
    let p = ctx.path("report.json");
    io::write_json(&p, &est.report(spec.kind()))?;
    let estimated = ctx.cfg.input.alpha_file.is_none();
    Ok(if estimated && est.all_degenerate() {
        Outcome::Degenerate
    } else {
        Outcome::Done
    })
}

fn grid(cfg: &RunConfig) -> Result<AlphaGrid> {
    AlphaGrid::log_spaced(cfg.grid.min, cfg.grid.max, cfg.grid.points)
}

fn write_risk_csv(ctx: &mut Context, report: &OptimalityReport) -> Result<()> {
    let mut text = String::from("alpha");
    for c in &report.components {
        text.push_str(&format!(",J_{}", c.j));
    }
    text.push('\n');
    for (k, a) in report.grid.iter().enumerate() {
        text.push_str(&fmt_f64(*a));
        for c in &report.components {
            text.push(',');
            text.push_str(&fmt_f64(c.risk[k]));
        }
        text.push('\n');
    }
    let p = ctx.path("risk_curve.csv");
    write_text(&p, text)
}

fn write_rmse_csv(ctx: &mut Context, report: &ConsistencyReport) -> Result<()> {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut text = String::from(
        "n,j,mean_mu,se_mu,bias_mu,rmse_mu,var_mu,var_mu_theory,mean_tau,se_tau,bias_tau,\
         rmse_tau,rmse_alpha,median_abs_alpha_error,degenerate_fraction\n",
    );
    for l in &report.lengths {
        for c in &l.components {
            let fields = [
                l.n.to_string(),
                c.j.to_string(),
                fmt_f64(c.mean_mu),
                fmt_f64(c.se_mu),
                fmt_f64(c.bias_mu),
                fmt_f64(c.rmse_mu),
                fmt_f64(c.var_mu),
                opt(c.var_mu_theory),
                fmt_f64(c.mean_tau),
                fmt_f64(c.se_tau),
                fmt_f64(c.bias_tau),
                fmt_f64(c.rmse_tau),
                opt(c.rmse_alpha),
                fmt_f64(c.median_abs_alpha_error),
                fmt_f64(c.degenerate_fraction),
            ];
            text.push_str(&fields.join(","));
            text.push('\n');
        }
    }
    let p = ctx.path("rmse.csv");
    write_text(&p, text)
}

fn write_text(path: &Path, text: String) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run_optimality(ctx: &mut Context) -> Result<OptimalityReport> {
    let grid = grid(&ctx.cfg)?;
    let model = ctx
        .cfg
        .model
        .clone()
        .unwrap_or_else(default_optimality_model);
    let report = model_sim::verify_optimality(&model.params(ctx.cfg.seed())?, &grid)?;
    write_risk_csv(ctx, &report)?;
    let p = ctx.path("optimality.json");
    io::write_json(&p, &report)?;
    Ok(report)
}

fn run_consistency(ctx: &mut Context) -> Result<ConsistencyReport> {
    let model = ctx
        .cfg
        .model
        .clone()
        .unwrap_or_else(default_consistency_model);
    let params = model.params(ctx.cfg.seed())?;
    let report = model_sim::mc_consistency(
        &params,
        &ctx.cfg.mc.n_list,
        ctx.cfg.mc.reps,
        ctx.cfg.alpha_max(),
    )?;
    write_rmse_csv(ctx, &report)?;
    let p = ctx.path("consistency.json");
    io::write_json(&p, &report)?;
    Ok(report)
}

fn verdict(passed: bool) -> Outcome {
    if passed {
        Outcome::Done
    } else {
        Outcome::VerificationFailed
    }
}

fn cmd_verify_optimality(ctx: &mut Context) -> Result<Outcome> {
    Ok(verdict(run_optimality(ctx)?.passed))
}

fn cmd_mc_consistency(ctx: &mut Context) -> Result<Outcome> {
    Ok(verdict(run_consistency(ctx)?.passed))
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
}

#[derive(Serialize)]
struct Verdict {
    checks: Vec<Check>,
    passed: bool,
}

fn cmd_verify(ctx: &mut Context) -> Result<Outcome> {
    // Validate the grid before spending time on the Monte Carlo study.
    grid(&ctx.cfg)?;
    let opt = run_optimality(ctx)?;
    let mc = run_consistency(ctx)?;
    let checks = vec![
        Check {
            name: "risk_minimized_at_noise_to_signal_ratio",
            passed: opt.passed,
        },
        Check {
            name: "variance_estimator_rmse_non_increasing",
            passed: mc.rmse_monotone,
        },
        Check {
            name: "operator_estimate_error_decreasing",
            passed: mc.alpha_error_decreasing,
        },
    ];
    let passed = checks.iter().all(|c| c.passed);
    let p = ctx.path("verdict.json");
    io::write_json(&p, &Verdict { checks, passed })?;
    Ok(verdict(passed))
}

#[derive(Serialize)]
struct Machine {
    os: &'static str,
    arch: &'static str,
    logical_cpus: usize,
    rayon_threads: usize,
    package_version: &'static str,
    debug_build: bool,
}

#[derive(Serialize)]
struct BenchRow {
    n: usize,
    method: &'static str,
    seconds: f64,
    throughput: f64,
    max_rel_diff_vs_dense: Option<f64>,
}

#[derive(Serialize)]
struct BenchReport {
    machine: Machine,
    alpha: f64,
    rows: Vec<BenchRow>,
}

fn best_of<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(f64, T)> {
    let mut best = f64::INFINITY;
    let mut last = None;
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        let v = f()?;
        best = best.min(t.elapsed().as_secs_f64());
        last = Some(v);
    }
    Ok((best, last.expect("at least one repeat")))
}

fn dense_smooth(x: &[f64], alpha: f64) -> Option<Vec<f64>> {
    use nalgebra::{DMatrix, DVector};
    let n = x.len();
    let p = DMatrix::from_fn(n - 2, n, |r, c| match c as isize - r as isize {
        0 | 2 => 1.0,
        1 => -2.0,
        _ => 0.0,
    });
    let a = DMatrix::identity(n, n) + p.transpose() * &p * alpha;
    a.cholesky()
        .map(|c| c.solve(&DVector::from_column_slice(x)).as_slice().to_vec())
}

fn cmd_bench(ctx: &mut Context) -> Result<Outcome> {
    let b = ctx.cfg.bench.clone();
    if b.n_list.is_empty() {
        return Err(usage("bench needs a nonempty n_list"));
    }
    let mut rows = Vec::new();
    for &n in &b.n_list {
        let params = ModelParams::new(n.max(5), vec![1.0], vec![1.0], ctx.cfg.seed())?;
        let x = model_sim::simulate(&params)?.x.column(0).to_vec();
        let x = &x[..n.max(3).min(x.len())];
        let (secs, banded) = best_of(b.repeats, || Smoother::new(x.len(), b.alpha)?.apply(x))?;
        let mut diff = None;
        if n <= b.dense_max {
            let (dsecs, dense) = best_of(b.repeats, || Ok(dense_smooth(x, b.alpha)))?;
            if let Some(dense) = dense {
                let num = banded
                    .iter()
                    .zip(&dense)
                    .map(|(a, d)| (a - d).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let den = dense.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-300);
                diff = Some(num / den);
            }
            rows.push(BenchRow {
                n,
                method: "dense",
                seconds: dsecs,
                throughput: n as f64 / dsecs,
                max_rel_diff_vs_dense: None,
            });
        }
        rows.push(BenchRow {
            n,
            method: "banded",
            seconds: secs,
            throughput: n as f64 / secs,
            max_rel_diff_vs_dense: diff,
        });
    }
    let mut text = String::from("n,method,seconds,throughput,rel_diff_vs_dense\n");
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n,
            r.method,
            fmt_f64(r.seconds),
            fmt_f64(r.throughput),
            r.max_rel_diff_vs_dense.map(fmt_f64).unwrap_or_default()
        ));
    }
    let p = ctx.path("bench.csv");
    write_text(&p, text)?;
    let report = BenchReport {
        machine: Machine {
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            logical_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            rayon_threads: rayon::current_num_threads(),
            package_version: env!("CARGO_PKG_VERSION"),
            debug_build: cfg!(debug_assertions),
        },
        alpha: b.alpha,
        rows,
    };
    let p = ctx.path("bench.json");
    io::write_json(&p, &report)?;
    Ok(Outcome::Done)
}
