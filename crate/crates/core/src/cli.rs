//! Command line frontend: one subcommand per experiment.
//!
//! Reports (`qubit`, `gaussian`, `submodel`) default to JSON; tables
//! (`sweep`, `gibbs-curve`, `dynamics`) default to CSV. Floats are written
//! with 17 significant digits. Errors go to stderr as `error: <Name>: <message>`
//! with a status specific to the error kind.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use log::info;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::estimation::{EstimationReport, SubmodelBounds, Tolerances, DEFAULT_EIG_TOL};
use crate::gaussian::{
    ai_gaussian, closed_form_qfim, closed_form_spectrum, closed_form_uhlmann, evolve_lossy,
    excitation_parametrization, freq_loss_model, gaussian_report, moments, Chart, GaussianParams,
    GaussianState,
};
use crate::io::{fmt_f64, fmt_opt, write_json};
use crate::linalg::{gellmann_basis, purity, RMatrix, DEFAULT_RANK_TOL};
use crate::model::{bloch_qubit, mixture_coordinates, qudit_mixture, DEFAULT_FD_STEP};
use crate::sampler::{
    gibbs_curve, random_state, sample_rng, sample_seed, sweep, write_sweep_csv, write_sweep_jsonl,
    GibbsPoint, SweepOutcome,
};

/// Agreement required by the built-in consistency checks.
pub const CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "qai",
    version,
    about = "Asymptotic incompatibility of multiparameter quantum models",
    args_override_self = true
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format. Reports default to json, tables to csv.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Smallest state eigenvalue accepted by the SLD solver.
    #[arg(long, global = true, default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    /// Threshold for counting positive eigenvalues of i Q^-1 U.
    #[arg(long, global = true, default_value_t = DEFAULT_EIG_TOL)]
    pub eig_tol: f64,
    /// Finite-difference step for models without analytic derivatives.
    #[arg(long, global = true, default_value_t = DEFAULT_FD_STEP)]
    pub fd_step: f64,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, env = "QAI_THREADS")]
    pub threads: Option<usize>,
    /// File of `key = value` lines mirroring the flags; flags win on conflict.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
}

impl GlobalArgs {
    pub fn tolerances(&self) -> Result<Tolerances> {
        let tol = Tolerances {
            rank_tol: self.rank_tol,
            eig_tol: self.eig_tol,
            fd_step: self.fd_step,
        };
        tol.validate()?;
        Ok(tol)
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Qubit in Bloch coordinates (r, theta, phi).
    Qubit(QubitArgs),
    /// Displaced squeezed thermal state (Re a, Im a, r, phi, N).
    Gaussian(GaussianArgs),
    /// AI against purity for random full-tomography qudit models.
    Sweep(SweepArgs),
    /// AI along inverse temperature for a fixed Hamiltonian spectrum.
    GibbsCurve(GibbsArgs),
    /// Frequency and loss-rate estimation under lossy evolution.
    Dynamics(DynamicsArgs),
    /// AI of a submodel and its interlacing bracket.
    Submodel(SubmodelArgs),
}

impl Command {
    fn default_format(&self) -> Format {
        match self {
            Command::Qubit(_) | Command::Gaussian(_) | Command::Submodel(_) => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct QubitArgs {
    #[arg(long)]
    pub r: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub phi: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GaussianArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub re_alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub im_alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub r: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub phi: f64,
    /// Thermal photon number N.
    #[arg(long = "n", alias = "n-thermal")]
    pub n_thermal: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Hilbert-space dimension (3 or more; use `qubit` for d = 2).
    #[arg(short = 'd', long = "dim", alias = "d")]
    pub dim: usize,
    /// Number of random states.
    #[arg(short = 'n', long = "samples", alias = "n")]
    pub samples: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GibbsArgs {
    /// Hamiltonian spectrum, comma separated, each in [-1, 1].
    #[arg(
        long,
        value_delimiter = ',',
        num_args = 1..,
        action = ArgAction::Set,
        allow_negative_numbers = true,
        required = true
    )]
    pub deltas: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub beta_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub beta_max: f64,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DynamicsArgs {
    /// Mean photon number of the initial pure state.
    #[arg(long)]
    pub n_mean: f64,
    /// Fraction of the photons due to squeezing.
    #[arg(long)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 5.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Qubit,
    Gaussian,
    Random,
}

#[derive(Debug, Clone, Args)]
pub struct SubmodelArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Parameters to keep, by name or index, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., action = ArgAction::Set, required = true)]
    pub subset: Vec<String>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub phi: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub re_alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub im_alpha: Option<f64>,
    #[arg(long = "n", alias = "n-thermal")]
    pub n_thermal: Option<f64>,
    /// Dimension of the random model.
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct QubitOutput {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub purity: f64,
    /// `√(2μ − 1)`.
    pub r_from_purity: f64,
    pub report: EstimationReport,
}

pub fn cmd_qubit(args: &QubitArgs, tol: &Tolerances) -> Result<QubitOutput> {
    let model = bloch_qubit(args.r, args.theta, args.phi)?;
    let mu = purity(&model.state()?);
    let report = EstimationReport::from_model(&model, tol)?;
    let r_from_purity = (2.0 * mu - 1.0).max(0.0).sqrt();
    for (label, expected) in [("r", args.r), ("sqrt(2 mu - 1)", r_from_purity)] {
        if (report.r - expected).abs() > CHECK_TOL {
            return Err(Error::CheckFailed(format!(
                "qubit AI {} differs from {label} = {expected}",
                report.r
            )));
        }
    }
    Ok(QubitOutput {
        r: args.r,
        theta: args.theta,
        phi: args.phi,
        purity: mu,
        r_from_purity,
        report,
    })
}

fn rows(m: &RMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussianOutput {
    pub params: GaussianParams,
    pub mu: f64,
    pub moments: GaussianState,
    /// Closed-form `Q` and `U` in the polar chart.
    pub closed_form_q: Vec<Vec<f64>>,
    pub closed_form_u: Vec<Vec<f64>>,
    pub closed_form_spectrum: Vec<f64>,
    pub closed_form_ai: f64,
    /// Chart of the finite-difference report.
    pub chart: Chart,
    pub names: Vec<String>,
    pub report: EstimationReport,
}

pub fn cmd_gaussian(args: &GaussianArgs, tol: &Tolerances) -> Result<GaussianOutput> {
    let params = GaussianParams::new(
        args.re_alpha,
        args.im_alpha,
        args.r,
        args.phi,
        args.n_thermal,
    )?;
    let chart = Chart::for_params(&params);
    let report = gaussian_report(&params, chart, tol)?;
    let mu = params.purity();
    let closed_form_ai = ai_gaussian(mu);
    if (report.r - closed_form_ai).abs() > 1e-6 {
        return Err(Error::CheckFailed(format!(
            "finite-difference AI {} differs from 2mu/(1+mu^2) = {closed_form_ai}",
            report.r
        )));
    }
    Ok(GaussianOutput {
        params,
        mu,
        moments: moments(&params),
        closed_form_q: rows(&closed_form_qfim(&params)),
        closed_form_u: rows(&closed_form_uhlmann(&params)),
        closed_form_spectrum: closed_form_spectrum(mu),
        closed_form_ai,
        chart,
        names: chart.names().iter().map(|s| s.to_string()).collect(),
        report,
    })
}

pub fn cmd_sweep(args: &SweepArgs, seed: u64, tol: &Tolerances) -> Result<SweepOutcome> {
    if args.dim < 3 {
        return Err(Error::Domain(format!(
            "sweep needs d >= 3, got {}; use `qubit` for d = 2",
            args.dim
        )));
    }
    sweep(args.dim, args.samples, seed, tol)
}

pub fn cmd_gibbs_curve(args: &GibbsArgs, seed: u64, tol: &Tolerances) -> Result<Vec<GibbsPoint>> {
    if args.steps == 0 {
        return Err(Error::Domain("steps must be at least 1".into()));
    }
    if !(args.beta_min >= 0.0) || !(args.beta_max >= args.beta_min) {
        return Err(Error::Domain(format!(
            "need 0 <= beta_min <= beta_max, got [{}, {}]",
            args.beta_min, args.beta_max
        )));
    }
    let betas: Vec<f64> = (0..=args.steps)
        .map(|i| args.beta_min + (args.beta_max - args.beta_min) * i as f64 / args.steps as f64)
        .collect();
    gibbs_curve(&args.deltas, &betas, seed, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DynamicsRow {
    pub t: f64,
    pub mu: f64,
    /// AI of the five-parameter model at `μ(t)`.
    pub r5: f64,
    /// AI of the `(ω, γ)` model; `None` where its QFIM is singular.
    pub r2: Option<f64>,
}

pub fn cmd_dynamics(args: &DynamicsArgs, tol: &Tolerances) -> Result<Vec<DynamicsRow>> {
    if !(args.t_max > 0.0) || args.steps == 0 {
        return Err(Error::Domain(
            "t_max must be positive and steps at least 1".into(),
        ));
    }
    let init = excitation_parametrization(args.n_mean, args.eta)?;
    let s0 = moments(&init);
    (0..=args.steps)
        .into_par_iter()
        .map(|i| {
            let t = args.t_max * i as f64 / args.steps as f64;
            let mu = evolve_lossy(&s0, args.omega, args.gamma, t)?.purity();
            let r5 = ai_gaussian(mu);
            let r2 = match freq_loss_model(&init, args.omega, args.gamma, t, tol) {
                Ok(rep) => Some(rep.r),
                Err(Error::SingularQfim { .. }) => None,
                Err(e) => return Err(e),
            };
            if let Some(r2) = r2 {
                if r2 > r5 + CHECK_TOL {
                    return Err(Error::CheckFailed(format!(
                        "t = {t}: two-parameter AI {r2} exceeds five-parameter AI {r5}"
                    )));
                }
            }
            Ok(DynamicsRow { t, mu, r5, r2 })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SubmodelOutput {
    pub model: ModelKind,
    pub names: Vec<String>,
    pub subset: Vec<String>,
    pub full_spectrum: Vec<f64>,
    pub r_full: f64,
    pub r_sub: f64,
    /// `r_{j+1}`, the lower end of the bracket.
    pub lower: f64,
    pub upper: f64,
    pub removed: usize,
    pub holds: bool,
}

/// Resolves parameter names or indices against `names`.
pub fn resolve_subset(tokens: &[String], names: &[String]) -> Result<Vec<usize>> {
    tokens
        .iter()
        .map(|tok| {
            let t = tok.trim();
            if let Ok(i) = t.parse::<usize>() {
                return Ok(i);
            }
            names
                .iter()
                .position(|n| n.eq_ignore_ascii_case(t))
                .ok_or_else(|| {
                    Error::InvalidSubset(format!(
                        "unknown parameter {t:?}; expected one of {names:?}"
                    ))
                })
        })
        .collect()
}

fn submodel_full_report(
    args: &SubmodelArgs,
    seed: u64,
    tol: &Tolerances,
) -> Result<(Vec<String>, EstimationReport)> {
    match args.model {
        ModelKind::Qubit => {
            let m = bloch_qubit(
                args.r.unwrap_or(0.8),
                args.theta.unwrap_or(1.0),
                args.phi.unwrap_or(0.5),
            )?;
            Ok((m.param_names(), EstimationReport::from_model(&m, tol)?))
        }
        ModelKind::Gaussian => {
            let p = GaussianParams::new(
                args.re_alpha.unwrap_or(0.3),
                args.im_alpha.unwrap_or(-0.2),
                args.r.unwrap_or(0.4),
                args.phi.unwrap_or(0.7),
                args.n_thermal.unwrap_or(0.5),
            )?;
            let chart = Chart::for_params(&p);
            let names = chart.names().iter().map(|s| s.to_string()).collect();
            Ok((names, gaussian_report(&p, chart, tol)?))
        }
        ModelKind::Random => {
            let basis = gellmann_basis(args.dim)?;
            let state = random_state(args.dim, &mut sample_rng(sample_seed(seed, 0)))?;
            let m = qudit_mixture(&mixture_coordinates(&state.rho, &basis), &basis)?;
            Ok((
                basis.labels().to_vec(),
                EstimationReport::from_model(&m, tol)?,
            ))
        }
    }
}

pub fn cmd_submodel(args: &SubmodelArgs, seed: u64, tol: &Tolerances) -> Result<SubmodelOutput> {
    let (names, full) = submodel_full_report(args, seed, tol)?;
    let subset = resolve_subset(&args.subset, &names)?;
    let b: SubmodelBounds = full.submodel_bounds(&subset, tol.eig_tol)?;
    let holds = b.holds(CHECK_TOL);
    if !holds {
        return Err(Error::CheckFailed(format!(
            "submodel AI {} outside [{}, {}]",
            b.r_sub, b.lower, b.upper
        )));
    }
    Ok(SubmodelOutput {
        model: args.model,
        subset: subset.iter().map(|&i| names[i].clone()).collect(),
        names,
        full_spectrum: full.i_spectrum.clone(),
        r_full: full.r,
        r_sub: b.r_sub,
        lower: b.lower,
        upper: b.upper,
        removed: b.removed,
        holds,
    })
}

/// Flattens a JSON value into `(path, value)` rows.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::Number(n) => {
            let s = match n.as_f64() {
                Some(f) if n.is_f64() => fmt_f64(f),
                _ => n.to_string(),
            };
            out.push((prefix.to_string(), s));
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_report<T: Serialize>(value: &T, format: Format, mut w: impl Write) -> Result<()> {
    match format {
        Format::Json => {
            write_json(&mut w, value)?;
            w.write_all(b"\n")?;
        }
        Format::Csv => {
            let v = serde_json::to_value(value).map_err(|e| Error::Io(e.to_string()))?;
            let mut rows = Vec::new();
            flatten("", &v, &mut rows);
            let mut cw = csv::Writer::from_writer(&mut w);
            cw.write_record(["key", "value"]).map_err(csv_err)?;
            for (k, x) in rows {
                cw.write_record([k, x]).map_err(csv_err)?;
            }
            cw.flush()?;
        }
    }
    Ok(())
}

fn write_table<T: Serialize>(
    header: &[&str],
    rows: &[T],
    to_fields: impl Fn(&T) -> Vec<String>,
    format: Format,
    mut w: impl Write,
) -> Result<()> {
    match format {
        Format::Json => {
            for r in rows {
                write_json(&mut w, r)?;
                w.write_all(b"\n")?;
            }
        }
        Format::Csv => {
            let mut cw = csv::Writer::from_writer(&mut w);
            cw.write_record(header).map_err(csv_err)?;
            for r in rows {
                cw.write_record(to_fields(r)).map_err(csv_err)?;
            }
            cw.flush()?;
        }
    }
    Ok(())
}

/// Runs the parsed command, writing its output to `w`.
pub fn execute(cli: &Cli, w: &mut dyn Write) -> Result<()> {
    let g = &cli.global;
    let tol = g.tolerances()?;
    let format = g.format.unwrap_or_else(|| cli.command.default_format());
    match &cli.command {
        Command::Qubit(a) => write_report(&cmd_qubit(a, &tol)?, format, w),
        Command::Gaussian(a) => write_report(&cmd_gaussian(a, &tol)?, format, w),
        Command::Submodel(a) => write_report(&cmd_submodel(a, g.seed, &tol)?, format, w),
        Command::Sweep(a) => {
            let out = cmd_sweep(a, g.seed, &tol)?;
            match format {
                Format::Csv => write_sweep_csv(&out.records, &mut *w)?,
                Format::Json => write_sweep_jsonl(&out.records, &mut *w)?,
            }
            let min_mu = out
                .min_purity_above(0.99)
                .map(fmt_f64)
                .unwrap_or_else(|| "none".into());
            eprintln!(
                "sweep d={} samples={} max_residual={:e} min_purity(R>0.99)={} skipped={} redrawn={}",
                a.dim,
                out.records.len(),
                out.max_residual(),
                min_mu,
                out.skipped,
                out.redrawn
            );
            Ok(())
        }
        Command::GibbsCurve(a) => write_table(
            &["beta", "mu", "r", "r_pipeline"],
            &cmd_gibbs_curve(a, g.seed, &tol)?,
            |p| {
                vec![
                    fmt_f64(p.beta),
                    fmt_f64(p.mu),
                    fmt_f64(p.r),
                    fmt_opt(p.r_pipeline),
                ]
            },
            format,
            w,
        ),
        Command::Dynamics(a) => write_table(
            &["t", "mu", "r5", "r2"],
            &cmd_dynamics(a, &tol)?,
            |r| vec![fmt_f64(r.t), fmt_f64(r.mu), fmt_f64(r.r5), fmt_opt(r.r2)],
            format,
            w,
        ),
    }
}

/// Runs [`execute`] on a dedicated pool when a thread count is given.
pub fn execute_with_threads(cli: &Cli, w: &mut (dyn Write + Send)) -> Result<()> {
    match cli.global.threads {
        Some(0) => Err(Error::Config("threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            pool.install(|| execute(cli, w))
        }
        None => execute(cli, w),
    }
}

/// Argument parsing failure: either a usage error or an unreadable config file.
#[derive(Debug)]
pub enum ParseError {
    Usage(clap::Error),
    Config(Error),
}

/// Reads `key = value` lines into `--key=value` flags.
pub fn config_flags(text: &str) -> Result<Vec<OsString>> {
    let mut flags = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(Error::Config(format!(
                "line {}: invalid key {:?}",
                no + 1,
                k.trim()
            )));
        }
        flags.push(OsString::from(format!("--{key}={}", v.trim())));
    }
    Ok(flags)
}

const VALUELESS: [&str; 7] = ["-h", "--help", "-V", "--version", "-v", "--verbose", "-vv"];

/// Position of the subcommand token in `args` (which starts with the program name).
fn subcommand_position(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if !s.starts_with('-') || s == "-" {
            return Some(i);
        }
        let takes_value =
            s.starts_with("--") && !s.contains('=') && !VALUELESS.contains(&s.as_ref());
        i += if takes_value { 2 } else { 1 };
    }
    None
}

/// Value of `--config` in a raw argument list.
fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    let mut found = None;
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            found = it.next().map(PathBuf::from);
        } else if let Some(v) = s.strip_prefix("--config=") {
            found = Some(PathBuf::from(v));
        }
    }
    found
}

pub fn parse_args<I, T>(args: I) -> std::result::Result<Cli, ParseError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let parse = |a: &[OsString]| {
        Cli::command()
            .try_get_matches_from(a)
            .and_then(|m| Cli::from_arg_matches(&m))
            .map_err(ParseError::Usage)
    };
    let (Some(path), Some(pos)) = (config_path(&args), subcommand_position(&args)) else {
        return parse(&args);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| ParseError::Config(Error::Config(format!("{}: {e}", path.display()))))?;
    let flags = config_flags(&text).map_err(ParseError::Config)?;
    // Config entries go first so that explicit flags override them.
    let mut merged = vec![args[0].clone(), args[pos].clone()];
    merged.extend(flags);
    merged.extend(args[1..pos].iter().cloned());
    merged.extend(args[pos + 1..].iter().cloned());
    parse(&merged)
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write + Send>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Entry point shared by the binary: parse, run, report errors.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse_args(args) {
        Ok(c) => c,
        Err(ParseError::Usage(e)) => e.exit(),
        Err(ParseError::Config(e)) => return fail(&e),
    };
    init_logging(cli.global.verbose);
    info!("running {:?}", cli.command);
    let result = open_output(&cli.global.out).and_then(|mut w| {
        execute_with_threads(&cli, &mut *w)?;
        w.flush()?;
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {}: {e}", e.name());
    ExitCode::from(e.exit_code())
}
