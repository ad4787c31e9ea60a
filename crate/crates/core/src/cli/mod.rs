//! The `adasense` command line.
//!
//! ```text
//! adasense bounds   --config grid.json   [--format csv|json]
//! adasense simulate --config exp.json    [--format csv|json]
//! adasense scan     --config exp.json    [--format csv|json|svg]
//! adasense phase    --config exp.json    [--format csv|json|svg]
//! adasense verify                        [--format json]
//! ```
//!
//! Every subcommand accepts `--set path=value` overrides of config fields and
//! `--output FILE`. Exit codes: 0 on success, 1 when an input is invalid (the
//! message names the field), 2 on internal failures. `verify` exits 1 when an
//! oracle check fails.

pub mod config;
pub mod svg;
mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{self, BoundError, BoundSpec};
use crate::harness::{self, ConfigError, ExperimentConfig, HarnessError};

pub use config::{apply_override, load, BoundsGrid};
pub use svg::{render_phase_svg, render_svg, SvgError};
pub use verify::{run_verification, Verdict};

#[derive(Debug, Parser)]
#[command(name = "adasense", version, about = "Budgeted adaptive sensing of sparse signals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Table of closed-form bounds over a parameter grid.
    Bounds(IoArgs),
    /// Monte Carlo risk curve.
    Simulate(IoArgs),
    /// Risk curve and the amplitude at which it crosses `target_risk`.
    Scan(IoArgs),
    /// Threshold scans over `s_grid`.
    Phase(IoArgs),
    /// Oracle checks, as a JSON array of verdicts.
    Verify(IoArgs),
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// JSON configuration file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a config field, e.g. `--set trials=500 --set sds.steps=4`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub set: Vec<String>,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(short, long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug)]
pub enum CliError {
    Invalid(ConfigError),
    /// Oracle checks ran but some failed.
    Failed(usize),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) | CliError::Failed(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Invalid(e) => write!(f, "{e}"),
            CliError::Failed(k) => write!(f, "{k} oracle check(s) failed"),
            CliError::Internal(e) => write!(f, "internal error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Invalid(e)
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(c) => CliError::Invalid(c),
            other => CliError::Internal(other.to_string()),
        }
    }
}

fn bound_error(e: BoundError) -> ConfigError {
    let field = match e {
        BoundError::InvalidEpsilon(_) => "epsilon",
        BoundError::InvalidSparsity { .. } => "s",
        BoundError::InvalidDimension(_) => "n",
        BoundError::InvalidBudget(_) => "m",
    };
    ConfigError::new(field, e.to_string())
}

fn read_config(args: &IoArgs) -> Result<Option<String>, CliError> {
    args.config
        .as_ref()
        .map(|p| {
            std::fs::read_to_string(p)
                .map_err(|e| CliError::Invalid(ConfigError::new("config", format!("{}: {e}", p.display()))))
        })
        .transpose()
}

fn format_of(args: &IoArgs, default: Format, allowed: &[Format]) -> Result<Format, ConfigError> {
    let f = args.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(ConfigError::new(
            "format",
            format!("{f:?} output is not available for this subcommand").to_lowercase(),
        ))
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn emit(args: &IoArgs, text: &str) -> Result<(), CliError> {
    let res = match &args.output {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    res.map_err(|e| CliError::Internal(e.to_string()))
}

/// Bounds drawn as reference lines next to a risk curve.
pub fn reference_bounds(config: &ExperimentConfig, s: usize) -> Vec<BoundSpec> {
    let (n, m) = (config.n, config.m);
    let eps = config.target_risk.unwrap_or(config.epsilon).min(0.999);
    let candidates = if config.metric.is_detection() {
        vec![
            bounds::detection_lower_bound(n, s, m, eps),
            bounds::mds_sufficient_magnitude(n, s, m),
        ]
    } else {
        vec![
            bounds::estimation_lower_bound(n, s, m, eps),
            bounds::estimation_upper_bound(n, s, m),
        ]
    };
    candidates.into_iter().filter_map(Result::ok).collect()
}

fn cmd_bounds(args: &IoArgs) -> Result<(), CliError> {
    let grid: BoundsGrid = load(read_config(args)?.as_deref(), &args.set)?;
    let format = format_of(args, Format::Csv, &[Format::Csv, Format::Json])?;
    let names: Vec<String> = grid
        .names
        .clone()
        .unwrap_or_else(|| bounds::BOUND_NAMES.iter().map(|s| s.to_string()).collect());
    let mut rows = Vec::new();
    for name in &names {
        for &n in &grid.n {
            let ms = grid.m.clone().unwrap_or_else(|| vec![n as f64]);
            for &s in &grid.s {
                for &m in &ms {
                    for &eps in &grid.epsilon {
                        let b = bounds::evaluate(name, n, s, m, eps)
                            .ok_or_else(|| ConfigError::new("names", format!("unknown bound `{name}`")))?
                            .map_err(bound_error)?;
                        if !rows.contains(&b) {
                            rows.push(b);
                        }
                    }
                }
            }
        }
    }
    let text = match format {
        Format::Json => to_json(&rows),
        _ => {
            let mut out = format!("{}\n", BoundSpec::CSV_HEADER);
            for r in &rows {
                out.push_str(&r.csv_row());
                out.push('\n');
            }
            out
        }
    };
    emit(args, &text)
}

fn experiment(args: &IoArgs) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = load(read_config(args)?.as_deref(), &args.set)?;
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_simulate(args: &IoArgs) -> Result<(), CliError> {
    let cfg = experiment(args)?;
    let format = format_of(args, Format::Csv, &[Format::Csv, Format::Json])?;
    let curve = harness::run_experiment(&cfg)?;
    emit(
        args,
        &match format {
            Format::Json => to_json(&curve),
            _ => curve.to_csv(),
        },
    )
}

#[derive(Serialize)]
struct ScanOutput<'a> {
    curve: &'a harness::RiskCurve,
    scan: &'a harness::ScanResult,
}

fn cmd_scan(args: &IoArgs) -> Result<(), CliError> {
    let cfg = experiment(args)?;
    let format = format_of(args, Format::Csv, &[Format::Csv, Format::Json, Format::Svg])?;
    let (curve, result) = harness::scan(&cfg)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("mu* = {}", result.describe());
    let text = match format {
        Format::Json => to_json(&ScanOutput {
            curve: &curve,
            scan: &result,
        }),
        Format::Svg => render_svg(&curve, &reference_bounds(&cfg, cfg.s))
            .map_err(|e| CliError::Internal(e.to_string()))?,
        Format::Csv => curve.to_csv(),
    };
    emit(args, &text)
}

fn cmd_phase(args: &IoArgs) -> Result<(), CliError> {
    let cfg = experiment(args)?;
    let format = format_of(args, Format::Csv, &[Format::Csv, Format::Json, Format::Svg])?;
    let diagram = harness::phase_diagram(&cfg)?;
    for row in &diagram.rows {
        for w in &row.warnings {
            eprintln!("warning (s = {}): {w}", row.s);
        }
    }
    let text = match format {
        Format::Json => to_json(&diagram),
        Format::Svg => render_phase_svg(&diagram, &[]).map_err(|e| CliError::Internal(e.to_string()))?,
        Format::Csv => diagram.to_csv(),
    };
    emit(args, &text)
}

fn cmd_verify(args: &IoArgs) -> Result<(), CliError> {
    format_of(args, Format::Json, &[Format::Json])?;
    let verdicts = run_verification().map_err(|e| CliError::Internal(e.to_string()))?;
    emit(args, &to_json(&verdicts))?;
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    if failed > 0 {
        return Err(CliError::Failed(failed));
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Phase(a) => cmd_phase(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
