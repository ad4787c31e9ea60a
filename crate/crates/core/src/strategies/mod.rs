//! Sensing and inference procedures.
//!
//! Each procedure exists as a plain function taking its parameters
//! explicitly, and as a [`Strategy`] object bundling those parameters so the
//! risk estimators and the harness can run it repeatedly. Strategy ids are
//! `uniform`, `sds`, `ds`, `mds`, `sprt`; a `sym:` prefix wraps any of them
//! in the random-permutation symmetrization.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::SensingError;
use crate::rng::SimRng;
use crate::sensing::{SensingTrace, SparseSignal};

mod ds;
mod mds;
mod sds;
mod sprt;
mod symmetrize;
mod uniform;

pub use ds::{distilled_sensing, DsOutcome, DsParams, DsStrategy};
pub use mds::{mds_detect, mds_subsample, mds_subsample_size, MdsStrategy};
pub use sds::{simple_distilled_sensing, SdsParams, SdsStrategy};
pub use sprt::{parallel_sprt_estimate, SprtParams, SprtStrategy};
pub use symmetrize::{random_permutation, Symmetrized};
pub use uniform::{non_adaptive_uniform_estimate, UniformStrategy};

/// Result of a support-estimation procedure.
#[derive(Debug, Clone)]
pub struct EstimateOutcome {
    pub estimate: BTreeSet<usize>,
    pub trace: SensingTrace,
    /// The procedure stopped early because the budget ran out.
    pub truncated: bool,
}

/// Result of a detection procedure; `decision` is true when the null is
/// rejected.
#[derive(Debug, Clone)]
pub struct DetectOutcome {
    pub decision: bool,
    pub trace: SensingTrace,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Estimate(EstimateOutcome),
    Detect(DetectOutcome),
}

impl Outcome {
    pub fn trace(&self) -> &SensingTrace {
        match self {
            Outcome::Estimate(e) => &e.trace,
            Outcome::Detect(d) => &d.trace,
        }
    }

    pub fn trace_mut(&mut self) -> &mut SensingTrace {
        match self {
            Outcome::Estimate(e) => &mut e.trace,
            Outcome::Detect(d) => &mut d.trace,
        }
    }

    /// Detection decision. An estimator rejects the null when its support
    /// estimate is non-empty.
    pub fn decision(&self) -> bool {
        match self {
            Outcome::Estimate(e) => !e.estimate.is_empty(),
            Outcome::Detect(d) => d.decision,
        }
    }

    pub fn estimate(&self) -> Option<&BTreeSet<usize>> {
        match self {
            Outcome::Estimate(e) => Some(&e.estimate),
            Outcome::Detect(_) => None,
        }
    }

    pub fn truncated(&self) -> bool {
        matches!(self, Outcome::Estimate(e) if e.truncated)
    }
}

/// A configured sensing procedure.
pub trait Strategy: Send + Sync {
    fn id(&self) -> String;

    fn run(&self, signal: &SparseSignal, rng: &mut SimRng) -> Result<Outcome, SensingError>;

    /// Whether the procedure produces a support estimate.
    fn estimates_support(&self) -> bool {
        true
    }
}

/// Everything needed to instantiate a strategy by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyContext {
    pub n: usize,
    /// Sparsity assumed by the procedures that need it (mds, sprt).
    pub s: usize,
    /// Total precision budget.
    pub m: f64,
    /// Amplitude assumed by the procedures that need it (sprt).
    pub amplitude: f64,
    /// Target error level for the SPRT calibration.
    pub epsilon: f64,
    /// Threshold of the uniform estimator, in observation units.
    pub tau: Option<f64>,
    pub sds: Option<SdsParams>,
    pub ds: Option<DsParams>,
    pub sprt: Option<SprtParams>,
}

impl StrategyContext {
    pub fn new(n: usize, s: usize, m: f64, amplitude: f64) -> Self {
        Self {
            n,
            s,
            m,
            amplitude,
            epsilon: 0.1,
            tau: None,
            sds: None,
            ds: None,
            sprt: None,
        }
    }
}

pub const STRATEGY_IDS: [&str; 5] = ["uniform", "sds", "ds", "mds", "sprt"];

pub fn build_strategy(id: &str, ctx: &StrategyContext) -> Result<Box<dyn Strategy>, SensingError> {
    if let Some(inner) = id.strip_prefix("sym:") {
        return Ok(Box::new(Symmetrized::new(build_strategy(inner, ctx)?)));
    }
    let n = ctx.n;
    let m = ctx.m;
    let s: Box<dyn Strategy> = match id {
        "uniform" => {
            let tau = ctx
                .tau
                .unwrap_or_else(|| UniformStrategy::default_threshold(n, m));
            Box::new(UniformStrategy::new(m, tau)?)
        }
        "sds" => {
            let params = match &ctx.sds {
                Some(p) => p.clone(),
                None => SdsParams::defaults(n, m)?,
            };
            Box::new(SdsStrategy::new(m, params)?)
        }
        "ds" => {
            let params = match &ctx.ds {
                Some(p) => p.clone(),
                None => DsParams::defaults(n),
            };
            Box::new(DsStrategy::new(m, params)?)
        }
        "mds" => {
            let params = match &ctx.ds {
                Some(p) => p.clone(),
                None => DsParams::defaults(n),
            };
            Box::new(MdsStrategy::new(ctx.s, m, params)?)
        }
        "sprt" => {
            let params = match &ctx.sprt {
                Some(p) => p.clone(),
                None => SprtParams::defaults(n, ctx.s, m, ctx.epsilon, ctx.amplitude)?,
            };
            Box::new(SprtStrategy::new(m, ctx.amplitude, params)?)
        }
        other => return Err(SensingError::UnknownStrategy(other.to_string())),
    };
    Ok(s)
}
