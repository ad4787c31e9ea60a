//! Deterministic parallel Monte Carlo experiments.
//!
//! Grid point `p` of an experiment draws all of its randomness from seeds
//! derived from `(master seed, p)`, and trial `t` within it from stream `t`.
//! Per-trial results are reduced with integer arithmetic, so a curve is a pure
//! function of its configuration whatever the number of worker threads.
//!
//! The thread count is taken from `ADASENSE_THREADS` when set.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::SensingError;
use crate::metrics::{detection_risk, estimation_risk, DEFAULT_SUPPORT_GRID};
use crate::rng::mix64;
use crate::sensing::SupportClass;
use crate::strategies::{build_strategy, DsParams, SdsParams, SprtParams, Strategy, StrategyContext};

pub const THREADS_ENV: &str = "ADASENSE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `R = p_∅ + max_S P_S(Φ̂ ≠ 1)`.
    Detection,
    /// `R̃`.
    DetectionMax,
    /// `R̄`.
    DetectionBayes,
    /// `max_S E_S d(Ŝ, S)`.
    SymDiff,
    Fdr,
    Ndr,
    /// `max_S P_S(Ŝ ≠ S)`.
    ExactFail,
}

impl Metric {
    pub fn is_detection(self) -> bool {
        matches!(self, Metric::Detection | Metric::DetectionMax | Metric::DetectionBayes)
    }
}

fn default_support_grid() -> usize {
    DEFAULT_SUPPORT_GRID
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub strategy: String,
    pub n: usize,
    pub s: usize,
    pub m: f64,
    pub amplitudes: Vec<f64>,
    pub trials: usize,
    pub metric: Metric,
    pub seed: u64,
    #[serde(default = "default_support_grid")]
    pub support_grid: usize,
    /// Error target used to calibrate the SPRT.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Risk level `r*` for threshold scans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_risk: Option<f64>,
    /// Sparsities of a phase diagram.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sds: Option<SdsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ds: Option<DsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sprt: Option<SprtParams>,
}

/// A configuration value that cannot be used, with the dotted path of the
/// offending field.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("grid point {point} (mu = {mu}): {source}")]
    Point {
        point: usize,
        mu: f64,
        #[source]
        source: SensingError,
    },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl ExperimentConfig {
    pub fn new(strategy: &str, n: usize, s: usize, m: f64, amplitudes: Vec<f64>, trials: usize, metric: Metric, seed: u64) -> Self {
        Self {
            strategy: strategy.into(),
            n,
            s,
            m,
            amplitudes,
            trials,
            metric,
            seed,
            support_grid: DEFAULT_SUPPORT_GRID,
            epsilon: default_epsilon(),
            tau: None,
            target_risk: None,
            s_grid: None,
            sds: None,
            ds: None,
            sprt: None,
        }
    }

    /// Strategy parameters at amplitude `mu` and sparsity `s`.
    pub fn context(&self, s: usize, mu: f64) -> StrategyContext {
        let mut ctx = StrategyContext::new(self.n, s, self.m, mu);
        ctx.epsilon = self.epsilon;
        ctx.tau = self.tau;
        ctx.sds = self.sds.clone();
        ctx.ds = self.ds.clone();
        ctx.sprt = self.sprt.clone();
        ctx
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::new("n", "must be positive"));
        }
        if self.s == 0 || self.s > self.n {
            return Err(ConfigError::new("s", format!("must lie in 1..={}", self.n)));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(ConfigError::new("m", "must be positive and finite"));
        }
        if self.amplitudes.is_empty() {
            return Err(ConfigError::new("amplitudes", "grid must be non-empty"));
        }
        if self.amplitudes.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(ConfigError::new("amplitudes", "must be finite and non-negative"));
        }
        if self.trials < 2 {
            return Err(ConfigError::new("trials", "must be at least 2"));
        }
        if self.support_grid == 0 {
            return Err(ConfigError::new("support_grid", "must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(ConfigError::new("epsilon", "must lie in (0, 1]"));
        }
        if let Some(r) = self.target_risk {
            if !(r > 0.0 && r.is_finite()) {
                return Err(ConfigError::new("target_risk", "must be positive"));
            }
        }
        if let Some(grid) = &self.s_grid {
            if grid.is_empty() || grid.iter().any(|&s| s == 0 || s > self.n) {
                return Err(ConfigError::new("s_grid", format!("entries must lie in 1..={}", self.n)));
            }
        }
        for &s in self.s_grid.as_deref().unwrap_or(&[self.s]) {
            for &mu in &self.amplitudes {
                let st = build_strategy(&self.strategy, &self.context(s, mu)).map_err(|e| {
                    // procedures calibrated on μ cannot be built at μ = 0
                    let field = if mu == 0.0 { "amplitudes" } else { field_of(&e, &self.strategy) };
                    ConfigError::new(field, e.to_string())
                })?;
                if !self.metric.is_detection() && !st.estimates_support() {
                    return Err(ConfigError::new(
                        "metric",
                        format!("strategy `{}` does not estimate a support", self.strategy),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn field_of(e: &SensingError, strategy: &str) -> &'static str {
    match e {
        SensingError::UnknownStrategy(_) => "strategy",
        SensingError::InvalidDimension { .. } => "n",
        _ if strategy.ends_with("sds") => "sds",
        _ if strategy.ends_with("sprt") => "sprt",
        _ if strategy.ends_with("ds") => "ds",
        _ => "strategy",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskPoint {
    pub mu: f64,
    pub risk: f64,
    pub se: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMetadata {
    pub config: ExperimentConfig,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCurve {
    pub s: usize,
    pub points: Vec<RiskPoint>,
    pub metadata: CurveMetadata,
}

pub const CSV_COLUMNS: &str = "s,mu,risk,se,trials";

fn csv_rows(out: &mut String, s: usize, points: &[RiskPoint]) {
    for p in points {
        let _ = writeln!(out, "{s},{},{},{},{}", p.mu, p.risk, p.se, p.trials);
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("malformed csv line {line}: {message}")]
pub struct CsvError {
    pub line: usize,
    pub message: String,
}

/// Parses a CSV emitted by [`RiskCurve::to_csv`] or [`PhaseDiagram::to_csv`]
/// into its JSON header and its rows.
fn parse_csv<T: serde::de::DeserializeOwned>(text: &str) -> Result<(T, Vec<(usize, RiskPoint)>), CsvError> {
    let err = |line: usize, message: String| CsvError { line, message };
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .and_then(|(_, l)| l.strip_prefix("# "))
        .ok_or_else(|| err(1, "missing metadata header".into()))?;
    let meta: T = serde_json::from_str(header).map_err(|e| err(1, e.to_string()))?;
    match lines.next() {
        Some((_, l)) if l == CSV_COLUMNS => {}
        _ => return Err(err(2, "missing column header".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(err(i + 1, "expected 5 fields".into()));
        }
        let bad = |e: &dyn std::fmt::Display| err(i + 1, e.to_string());
        rows.push((
            f[0].parse().map_err(|e| bad(&e))?,
            RiskPoint {
                mu: f[1].parse().map_err(|e| bad(&e))?,
                risk: f[2].parse().map_err(|e| bad(&e))?,
                se: f[3].parse().map_err(|e| bad(&e))?,
                trials: f[4].parse().map_err(|e| bad(&e))?,
            },
        ));
    }
    Ok((meta, rows))
}

impl RiskCurve {
    /// CSV with the metadata as a `# {json}` first line.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# {}\n{CSV_COLUMNS}\n",
            serde_json::to_string(&self.metadata).expect("serializable")
        );
        csv_rows(&mut out, self.s, &self.points);
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, CsvError> {
        let (metadata, rows) = parse_csv::<CurveMetadata>(text)?;
        let s = rows.first().map(|r| r.0).unwrap_or(metadata.config.s);
        Ok(Self {
            s,
            points: rows.into_iter().map(|r| r.1).collect(),
            metadata,
        })
    }
}

/// Runs `f` on a pool sized by `ADASENSE_THREADS`, or on the global pool.
pub fn with_thread_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let threads: usize = v
                .trim()
                .parse()
                .map_err(|_| HarnessError::Config(ConfigError::new(THREADS_ENV, "must be a non-negative integer")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}

fn point_seed(master: u64, s: usize, point: usize) -> u64 {
    mix64(master ^ mix64((s as u64) << 32 | point as u64))
}

/// Builds a strategy for a given sparsity and amplitude.
pub type StrategyFactory<'a> = dyn Fn(usize, f64) -> Result<Box<dyn Strategy>, SensingError> + Sync + 'a;

fn risk_at(
    config: &ExperimentConfig,
    strategy: &dyn Strategy,
    class: &SupportClass,
    mu: f64,
    seed: u64,
) -> Result<(f64, f64), SensingError> {
    let (t, g) = (config.trials, config.support_grid);
    if config.metric.is_detection() {
        let r = detection_risk(strategy, class, mu, t, g, seed)?;
        Ok(match config.metric {
            Metric::Detection => (r.risk_sum, r.se_risk_sum),
            Metric::DetectionMax => (r.risk_max, r.se_risk_max),
            _ => (r.risk_bayes, r.se_risk_bayes),
        })
    } else {
        let r = estimation_risk(strategy, class, mu, t, g, seed)?;
        Ok(match config.metric {
            Metric::SymDiff => (r.mean_sym_diff, r.se_mean_sym_diff),
            Metric::Fdr => (r.fdr, r.se_fdr),
            Metric::Ndr => (r.ndr, r.se_ndr),
            _ => (r.exact_fail, r.se_exact_fail),
        })
    }
}

fn curve_for(config: &ExperimentConfig, s: usize, factory: &StrategyFactory<'_>) -> Result<RiskCurve, HarnessError> {
    let class = SupportClass::all_subsets(config.n, s)
        .map_err(|e| ConfigError::new("s", e.to_string()))?;
    let mut amplitudes = config.amplitudes.clone();
    amplitudes.sort_by(f64::total_cmp);
    let mut points = Vec::with_capacity(amplitudes.len());
    for (p, &mu) in amplitudes.iter().enumerate() {
        let wrap = |source| HarnessError::Point { point: p, mu, source };
        let strategy = factory(s, mu).map_err(wrap)?;
        let (risk, se) = risk_at(config, strategy.as_ref(), &class, mu, point_seed(config.seed, s, p)).map_err(wrap)?;
        points.push(RiskPoint {
            mu,
            risk,
            se,
            trials: config.trials,
        });
    }
    Ok(RiskCurve {
        s,
        points,
        metadata: CurveMetadata {
            config: config.clone(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
    })
}

/// Risk curve of the configured strategy over the amplitude grid.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RiskCurve, HarnessError> {
    config.validate()?;
    let factory = |s: usize, mu: f64| build_strategy(&config.strategy, &config.context(s, mu));
    run_experiment_with(config, &factory)
}

/// [`run_experiment`] with a caller-supplied strategy.
pub fn run_experiment_with(config: &ExperimentConfig, factory: &StrategyFactory<'_>) -> Result<RiskCurve, HarnessError> {
    with_thread_pool(|| curve_for(config, config.s, factory))?
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    /// Interpolated crossing amplitude; `None` when the target is not reached.
    pub mu_star: Option<f64>,
    pub target_risk: f64,
    pub warnings: Vec<String>,
}

impl ScanResult {
    pub fn describe(&self) -> String {
        match self.mu_star {
            Some(mu) => format!("{mu}"),
            None => "not reached".into(),
        }
    }
}

/// Smallest amplitude at which `risk + 2 se` drops below `target`,
/// interpolated linearly from the preceding grid point.
///
/// Increases of the risk by more than twice the combined standard error are
/// reported as warnings.
pub fn threshold_scan(points: &[RiskPoint], target: f64) -> ScanResult {
    let upper: Vec<f64> = points.iter().map(|p| p.risk + 2.0 * p.se).collect();
    let mut warnings = Vec::new();
    for w in points.windows(2) {
        if w[1].risk - w[0].risk > 2.0 * (w[0].se + w[1].se) {
            warnings.push(format!(
                "risk increases from {} at mu = {} to {} at mu = {}",
                w[0].risk, w[0].mu, w[1].risk, w[1].mu
            ));
        }
    }
    let mu_star = upper.iter().position(|&u| u < target).map(|i| {
        if i == 0 {
            return points[0].mu;
        }
        let (a, b) = (upper[i - 1], upper[i]);
        let frac = if a > b { (a - target) / (a - b) } else { 1.0 };
        points[i - 1].mu + frac.clamp(0.0, 1.0) * (points[i].mu - points[i - 1].mu)
    });
    ScanResult {
        mu_star,
        target_risk: target,
        warnings,
    }
}

fn target_of(config: &ExperimentConfig) -> Result<f64, ConfigError> {
    config
        .target_risk
        .ok_or_else(|| ConfigError::new("target_risk", "required for scans"))
}

/// Runs the experiment and locates its crossing of `config.target_risk`.
pub fn scan(config: &ExperimentConfig) -> Result<(RiskCurve, ScanResult), HarnessError> {
    let target = target_of(config)?;
    let curve = run_experiment(config)?;
    let result = threshold_scan(&curve.points, target);
    Ok((curve, result))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub s: usize,
    pub mu_star: Option<f64>,
    pub points: Vec<RiskPoint>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub target_risk: f64,
    pub rows: Vec<PhaseRow>,
    pub metadata: CurveMetadata,
}

impl PhaseDiagram {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# {}\n{CSV_COLUMNS}\n",
            serde_json::to_string(&PhaseHeader {
                metadata: self.metadata.clone(),
                target_risk: self.target_risk,
                mu_star: self.rows.iter().map(|r| (r.s, r.mu_star)).collect(),
            })
            .expect("serializable")
        );
        for row in &self.rows {
            csv_rows(&mut out, row.s, &row.points);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, CsvError> {
        let (header, rows) = parse_csv::<PhaseHeader>(text)?;
        let mut out: Vec<PhaseRow> = header
            .mu_star
            .iter()
            .map(|&(s, mu_star)| PhaseRow {
                s,
                mu_star,
                points: Vec::new(),
                warnings: Vec::new(),
            })
            .collect();
        for (s, p) in rows {
            let row = out.iter_mut().find(|r| r.s == s).ok_or_else(|| CsvError {
                line: 0,
                message: format!("row for unknown s = {s}"),
            })?;
            row.points.push(p);
        }
        for row in &mut out {
            row.warnings = threshold_scan(&row.points, header.target_risk).warnings;
        }
        Ok(Self {
            target_risk: header.target_risk,
            rows: out,
            metadata: header.metadata,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PhaseHeader {
    metadata: CurveMetadata,
    target_risk: f64,
    mu_star: Vec<(usize, Option<f64>)>,
}

/// Threshold scans repeated over `config.s_grid`.
pub fn phase_diagram(config: &ExperimentConfig) -> Result<PhaseDiagram, HarnessError> {
    config.validate()?;
    let factory = |s: usize, mu: f64| build_strategy(&config.strategy, &config.context(s, mu));
    phase_diagram_with(config, &factory)
}

pub fn phase_diagram_with(config: &ExperimentConfig, factory: &StrategyFactory<'_>) -> Result<PhaseDiagram, HarnessError> {
    let target = target_of(config)?;
    let s_grid = config
        .s_grid
        .clone()
        .ok_or_else(|| ConfigError::new("s_grid", "required for phase diagrams"))?;
    let rows = with_thread_pool(|| {
        s_grid
            .iter()
            .map(|&s| {
                let curve = curve_for(config, s, factory)?;
                let scan = threshold_scan(&curve.points, target);
                Ok(PhaseRow {
                    s,
                    mu_star: scan.mu_star,
                    points: curve.points,
                    warnings: scan.warnings,
                })
            })
            .collect::<Result<Vec<_>, HarnessError>>()
    })??;
    Ok(PhaseDiagram {
        target_risk: target,
        rows,
        metadata: CurveMetadata {
            config: config.clone(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
    })
}
