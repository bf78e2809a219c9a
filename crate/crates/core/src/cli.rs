//! Command-line front end.
//!
//! Every subcommand reads a JSON run configuration:
//!
//! ```json
//! {
//!   "model": {"g": {"family": "inverse_power", "p": 2.0}, "beta": 1.0, "f": {"family": "linear"}},
//!   "lambda": 0.1, "alpha": 1.0, "u0": 0.0, "v0": 0.0, "t_max": 100.0,
//!   "alpha_grid": [0.0, 1.0], "lambda_grid": [0.13, 0.14], "tol": 1e-8
//! }
//! ```
//!
//! Exit codes: 0 success (including blow-up and quench outcomes), 2 bad
//! configuration or model, 3 numerical failure, 4 undetermined orbit.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    classify_trajectory, integrate, ClassificationResult, ClassifyOptions, Gamma,
    IntegrationOptions, Problem, Termination,
};
use crate::energy::{EnergyContext, EnergySummary};
use crate::error::{Error, Result};
use crate::manifold::{alpha_star, lambda_threshold, threshold_curve_csv};
use crate::model::{validate_assumptions, FModel, GModel, GridSpec, ModelSpec, ValidationReport};
use crate::output::fmt17;
use crate::stationary::{bifurcation_sweep, solve_branches, StationaryProfile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_UNDETERMINED: i32 = 4;

const DEFAULT_TOL: f64 = 1e-8;
const DEFAULT_T_MAX: f64 = 100.0;

#[derive(Debug, Parser)]
#[command(
    name = "pullin",
    about = "Thresholds and orbit classification for damped pull-in oscillators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fold point, thresholds and (with `lambda`) the branch and energy levels.
    Stationary(CommonArgs),
    /// Integrate one orbit and write trajectory.csv, events.jsonl and summary.json.
    Simulate(CommonArgs),
    /// Classify one orbit, or every (lambda, alpha) pair of the grids.
    Classify(CommonArgs),
    /// Dynamical threshold over `alpha_grid` and/or `alpha*` over `lambda_grid`.
    Threshold(CommonArgs),
    /// Branch table over `lambda_grid`.
    Bifurcation(CommonArgs),
    /// Check the model against the structural assumptions on g and f.
    Validate(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output file (a directory for `simulate`); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub tmax: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub u0: Option<f64>,
    #[serde(default)]
    pub v0: Option<f64>,
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub alpha_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check_finite()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn check_finite(&self) -> Result<()> {
        let scalars = [
            ("beta", Some(self.model.beta)),
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("u0", self.u0),
            ("v0", self.v0),
            ("t_max", self.t_max),
            ("tol", self.tol),
        ];
        for (name, value) in scalars {
            if let Some(x) = value {
                if !x.is_finite() {
                    return Err(Error::Config(format!("{name} must be finite")));
                }
            }
        }
        for (name, grid) in [
            ("alpha_grid", &self.alpha_grid),
            ("lambda_grid", &self.lambda_grid),
        ] {
            if let Some(g) = grid {
                if g.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Config(format!("{name} must be finite")));
                }
            }
        }
        Ok(())
    }

    fn require(&self, name: &str, value: Option<f64>) -> Result<f64> {
        value.ok_or_else(|| Error::Config(format!("missing `{name}`")))
    }

    fn problem(&self, g: &GModel, f: FModel) -> Result<Problem> {
        let alpha = self.require("alpha", self.alpha)?;
        let lambda = self.require("lambda", self.lambda)?;
        Problem::new(
            g.clone(),
            f,
            alpha,
            lambda,
            self.u0.unwrap_or(0.0),
            self.v0.unwrap_or(0.0),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryReport {
    pub p: f64,
    pub lambda_star: f64,
    pub lambda_bar: f64,
    pub phi2_bar: f64,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<EnergySummary>,
}

impl StationaryReport {
    fn to_csv(&self) -> String {
        let mut rows = vec![
            ("p", self.p),
            ("lambda_star", self.lambda_star),
            ("lambda_bar", self.lambda_bar),
            ("phi2_bar", self.phi2_bar),
            ("beta", self.beta),
        ];
        if let Some(b) = &self.branch {
            rows.extend([
                ("lambda", b.lambda),
                ("phi1", b.phi1),
                ("phi2", b.phi2),
                ("q", b.q),
                ("j_phi1", b.j_phi1),
                ("j_phi2", b.j_phi2),
                ("l", b.l),
            ]);
        }
        let mut s = String::from("quantity,value\n");
        for (k, v) in rows {
            s.push_str(&format!("{k},{}\n", fmt17(v)));
        }
        s
    }
}

/// Summary written by `simulate` and `classify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSummary {
    /// `Gamma1`, `Periodic`, `BlowUp`, `Quench`, `Gamma3` or `Undetermined`.
    pub classification: String,
    pub gamma: Gamma,
    pub termination: Termination,
    pub certificate: String,
    pub lambda: f64,
    pub alpha: f64,
    pub u0: f64,
    pub v0: f64,
    pub t_end: f64,
    pub u_end: f64,
    pub v_end: f64,
    #[serde(default)]
    pub period: Option<f64>,
}

/// Label used in reports: unbounded orbits are split by how they ended.
pub fn classification_label(c: &ClassificationResult) -> &'static str {
    match (c.gamma, c.termination) {
        (Gamma::Gamma3, Termination::Quench) => "Quench",
        (Gamma::Gamma3, Termination::BlowUp) => "BlowUp",
        (Gamma::Gamma3, _) => "Gamma3",
        (Gamma::Gamma1, _) => "Gamma1",
        (Gamma::Gamma2Boundary, _) => "Gamma2Boundary",
        (Gamma::Periodic, _) => "Periodic",
        (Gamma::Undetermined, _) => "Undetermined",
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidModel(_) | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let pool = match std::env::var("PULLIN_THREADS") {
        Ok(n) => match n.trim().parse::<usize>() {
            Ok(n) if n > 0 => rayon::ThreadPoolBuilder::new().num_threads(n).build().ok(),
            _ => {
                eprintln!("error: PULLIN_THREADS must be a positive integer, got {n:?}");
                return EXIT_CONFIG;
            }
        },
        Err(_) => None,
    };
    let result = match pool {
        Some(p) => p.install(|| execute(&cli.command)),
        None => execute(&cli.command),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs one command; `Ok` carries the exit code for outcomes that are not
/// errors (an undetermined orbit, a model failing validation).
pub fn execute(command: &Command) -> Result<i32> {
    let args = match command {
        Command::Stationary(a)
        | Command::Simulate(a)
        | Command::Classify(a)
        | Command::Threshold(a)
        | Command::Bifurcation(a)
        | Command::Validate(a) => a,
    };
    let cfg = RunConfig::load(&args.config)?;
    let ctx = Context::new(args, &cfg)?;
    let (g, f) = cfg.model.build().map_err(|e| match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    })?;
    match command {
        Command::Stationary(_) => cmd_stationary(&ctx, &cfg, &g),
        Command::Simulate(_) => cmd_simulate(&ctx, &cfg, &g, f),
        Command::Classify(_) => cmd_classify(&ctx, &cfg, &g, f),
        Command::Threshold(_) => cmd_threshold(&ctx, &cfg, &g, f),
        Command::Bifurcation(_) => cmd_bifurcation(&ctx, &cfg, &g),
        Command::Validate(_) => cmd_validate(&ctx, &g, f),
    }
}

struct Context {
    out: Option<PathBuf>,
    format: Option<Format>,
    tol: f64,
    t_max: f64,
}

impl Context {
    fn new(args: &CommonArgs, cfg: &RunConfig) -> Result<Self> {
        let out_cfg = cfg.output.as_ref();
        let tol = args.tol.or(cfg.tol).unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::Config(format!("tol must be positive, got {tol}")));
        }
        let t_max = args.tmax.or(cfg.t_max).unwrap_or(DEFAULT_T_MAX);
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::Config(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        Ok(Self {
            out: args
                .out
                .clone()
                .or_else(|| out_cfg.and_then(|o| o.path.clone())),
            format: args.format.or_else(|| out_cfg.and_then(|o| o.format)),
            tol,
            t_max,
        })
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => write_file(p, text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
}

pub fn stationary_report(g: &GModel, lambda: Option<f64>) -> Result<StationaryReport> {
    let profile = StationaryProfile::compute(g)?;
    let branch = match lambda {
        Some(l) => {
            solve_branches(g, l)?;
            Some(EnergyContext::new(g, l)?.summary())
        }
        None => None,
    };
    Ok(StationaryReport {
        p: profile.p,
        lambda_star: profile.lambda_star,
        lambda_bar: profile.lambda_bar,
        phi2_bar: profile.phi2_bar,
        beta: profile.beta,
        branch,
    })
}

fn cmd_stationary(ctx: &Context, cfg: &RunConfig, g: &GModel) -> Result<i32> {
    let report = stationary_report(g, cfg.lambda)?;
    let text = match ctx.format_or(Format::Json) {
        Format::Json => to_json(&report),
        Format::Csv => report.to_csv(),
    };
    ctx.emit(&text)?;
    Ok(EXIT_OK)
}

fn summarize(
    prob: &Problem,
    c: &ClassificationResult,
    t_end: f64,
    end: (f64, f64),
    period: Option<f64>,
) -> OrbitSummary {
    OrbitSummary {
        classification: classification_label(c).to_string(),
        gamma: c.gamma,
        termination: c.termination,
        certificate: c.certificate.clone(),
        lambda: prob.lambda,
        alpha: prob.alpha,
        u0: prob.u0,
        v0: prob.v0,
        t_end,
        u_end: end.0,
        v_end: end.1,
        period,
    }
}

fn undetermined_code(gamma: Gamma) -> i32 {
    if gamma == Gamma::Undetermined {
        EXIT_UNDETERMINED
    } else {
        EXIT_OK
    }
}

fn cmd_simulate(ctx: &Context, cfg: &RunConfig, g: &GModel, f: FModel) -> Result<i32> {
    let prob = cfg.problem(g, f)?;
    // Keep integrating after the sink is reached so the final state is settled.
    let opts = IntegrationOptions {
        stop_on_entrapment: false,
        ..Default::default()
    };
    let traj = integrate(&prob, ctx.t_max, &opts)?;
    let class = classify_trajectory(&prob, &traj);
    let summary = summarize(&prob, &class, traj.t_end, traj.last(), traj.period);
    let dir = ctx.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    write_file(&dir.join("trajectory.csv"), &traj.to_csv())?;
    write_file(&dir.join("events.jsonl"), &traj.events_jsonl())?;
    write_file(&dir.join("summary.json"), &to_json(&summary))?;
    Ok(undetermined_code(class.gamma))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRow {
    pub lambda: f64,
    pub alpha: f64,
    pub classification: String,
    pub t_end: f64,
}

fn cmd_classify(ctx: &Context, cfg: &RunConfig, g: &GModel, f: FModel) -> Result<i32> {
    let opts = ClassifyOptions {
        t_max: ctx.t_max,
        integration: IntegrationOptions::default(),
    };
    if cfg.alpha_grid.is_none() && cfg.lambda_grid.is_none() {
        let prob = cfg.problem(g, f)?;
        let traj = integrate(&prob, opts.t_max, &opts.integration)?;
        let class = classify_trajectory(&prob, &traj);
        let summary = summarize(&prob, &class, traj.t_end, traj.last(), traj.period);
        ctx.emit(&to_json(&summary))?;
        return Ok(undetermined_code(class.gamma));
    }
    let lambdas = match &cfg.lambda_grid {
        Some(grid) => grid.clone(),
        None => vec![cfg.require("lambda", cfg.lambda)?],
    };
    let alphas = match &cfg.alpha_grid {
        Some(grid) => grid.clone(),
        None => vec![cfg.require("alpha", cfg.alpha)?],
    };
    let pairs: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| alphas.iter().map(move |&a| (l, a)))
        .collect();
    let (u0, v0) = (cfg.u0.unwrap_or(0.0), cfg.v0.unwrap_or(0.0));
    let rows = pairs
        .par_iter()
        .map(|&(lambda, alpha)| {
            let prob = Problem::new(g.clone(), f, alpha, lambda, u0, v0)?;
            let traj = integrate(&prob, opts.t_max, &opts.integration)?;
            let class = classify_trajectory(&prob, &traj);
            Ok(ClassifyRow {
                lambda,
                alpha,
                classification: classification_label(&class).into(),
                t_end: traj.t_end,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let text = match ctx.format_or(Format::Csv) {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut s = String::from("lambda,alpha,classification,t_end\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt17(r.lambda),
                    fmt17(r.alpha),
                    r.classification,
                    fmt17(r.t_end)
                ));
            }
            s
        }
    };
    ctx.emit(&text)?;
    let undetermined = rows.iter().any(|r| r.classification == "Undetermined");
    Ok(if undetermined {
        EXIT_UNDETERMINED
    } else {
        EXIT_OK
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdReport {
    pub lambda_bar: f64,
    pub lambda_star: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_threshold: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_star: Option<Vec<[f64; 2]>>,
}

pub fn threshold_report(
    g: &GModel,
    alpha_grid: Option<&[f64]>,
    lambda_grid: Option<&[f64]>,
    tol: f64,
) -> Result<ThresholdReport> {
    let profile = StationaryProfile::compute(g)?;
    let by_alpha = alpha_grid
        .map(|grid| {
            grid.par_iter()
                .map(|&a| lambda_threshold(g, a, tol).map(|l| [a, l]))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let by_lambda = lambda_grid
        .map(|grid| {
            grid.par_iter()
                .map(|&l| alpha_star(g, l, tol).map(|a| [l, a]))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    Ok(ThresholdReport {
        lambda_bar: profile.lambda_bar,
        lambda_star: profile.lambda_star,
        lambda_threshold: by_alpha,
        alpha_star: by_lambda,
    })
}

fn cmd_threshold(ctx: &Context, cfg: &RunConfig, g: &GModel, f: FModel) -> Result<i32> {
    if !f.is_linear() {
        return Err(Error::Config(
            "threshold computations need linear damping".into(),
        ));
    }
    if cfg.alpha_grid.is_none() && cfg.lambda_grid.is_none() {
        return Err(Error::Config(
            "threshold needs `alpha_grid` or `lambda_grid`".into(),
        ));
    }
    let report = threshold_report(
        g,
        cfg.alpha_grid.as_deref(),
        cfg.lambda_grid.as_deref(),
        ctx.tol,
    )?;
    match ctx.format_or(Format::Csv) {
        Format::Json => ctx.emit(&to_json(&report))?,
        Format::Csv => {
            let profile = StationaryProfile::compute(g)?;
            let pairs =
                |rows: &Vec<[f64; 2]>| rows.iter().map(|r| (r[0], r[1])).collect::<Vec<_>>();
            let mut blocks = Vec::new();
            if let Some(rows) = &report.lambda_threshold {
                blocks.push((
                    "lambda_threshold.csv",
                    threshold_curve_csv(&pairs(rows), "alpha,lambda_threshold", &profile),
                ));
            }
            if let Some(rows) = &report.alpha_star {
                blocks.push((
                    "alpha_star.csv",
                    threshold_curve_csv(&pairs(rows), "lambda,alpha_star", &profile),
                ));
            }
            match (&ctx.out, blocks.len()) {
                // Two tables go to two files inside the output directory.
                (Some(dir), 2) => {
                    fs::create_dir_all(dir)
                        .map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
                    for (name, text) in &blocks {
                        write_file(&dir.join(name), text)?;
                    }
                }
                _ => {
                    let text = blocks
                        .iter()
                        .map(|b| b.1.as_str())
                        .collect::<Vec<_>>()
                        .join("\n");
                    ctx.emit(&text)?;
                }
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_bifurcation(ctx: &Context, cfg: &RunConfig, g: &GModel) -> Result<i32> {
    let grid = cfg
        .lambda_grid
        .as_deref()
        .ok_or_else(|| Error::Config("bifurcation needs `lambda_grid`".into()))?;
    let table = bifurcation_sweep(g, grid)?;
    let text = match ctx.format_or(Format::Csv) {
        Format::Json => to_json(&table),
        Format::Csv => table.to_csv(),
    };
    ctx.emit(&text)?;
    Ok(EXIT_OK)
}

fn cmd_validate(ctx: &Context, g: &GModel, f: FModel) -> Result<i32> {
    let report: ValidationReport = validate_assumptions(g, &f, &GridSpec::default());
    let text = match ctx.format_or(Format::Json) {
        Format::Json => to_json(&report),
        Format::Csv => {
            let opt = |x: Option<f64>| x.map(fmt17).unwrap_or_default();
            let mut s = String::from("check,passed,witness,value\n");
            for e in &report.entries {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    e.name,
                    e.passed,
                    opt(e.witness),
                    opt(e.value)
                ));
            }
            s
        }
    };
    ctx.emit(&text)?;
    Ok(if report.all_passed() {
        EXIT_OK
    } else {
        EXIT_CONFIG
    })
}
