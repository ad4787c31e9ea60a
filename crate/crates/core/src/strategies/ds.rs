use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::SensingError;
use crate::rng::SimRng;
use crate::sensing::{SensingSession, SensingTrace, SparseSignal};

use super::{EstimateOutcome, Outcome, Strategy};

/// Parameters of multi-stage distilled sensing.
///
/// Stage `t` spends `stage_budget_fractions[t] · m`; whatever the fractions
/// leave over is spent on one final measurement of the survivors, which
/// feeds the detection statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsParams {
    pub stages: usize,
    pub stage_budget_fractions: Vec<f64>,
    pub final_threshold_multiplier: f64,
}

/// Share of the budget left for the final test by [`DsParams::defaults`].
pub const DEFAULT_FINAL_FRACTION: f64 = 0.25;
pub const DEFAULT_THRESHOLD_MULTIPLIER: f64 = 1.5;

impl DsParams {
    pub fn new(
        stage_budget_fractions: Vec<f64>,
        final_threshold_multiplier: f64,
    ) -> Result<Self, SensingError> {
        let p = Self {
            stages: stage_budget_fractions.len(),
            stage_budget_fractions,
            final_threshold_multiplier,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SensingError> {
        let f = &self.stage_budget_fractions;
        if self.stages == 0 || f.len() != self.stages {
            return Err(SensingError::InvalidParams(format!(
                "ds: {} stages with {} budget fractions",
                self.stages,
                f.len()
            )));
        }
        if f.iter().any(|&x| !(x > 0.0 && x.is_finite())) || f.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(SensingError::InvalidParams(format!(
                "ds: fractions {f:?} must be positive and sum to at most 1"
            )));
        }
        if !(self.final_threshold_multiplier > 0.0) {
            return Err(SensingError::InvalidParams(format!(
                "ds: threshold multiplier {} must be positive",
                self.final_threshold_multiplier
            )));
        }
        Ok(())
    }

    /// `T = max(1, ⌈log₂ log₂ n⌉)` stages with budgets proportional to
    /// `(3/4)^t`, scaled so the stages use `1 - DEFAULT_FINAL_FRACTION` of
    /// the budget.
    pub fn defaults(n: usize) -> Self {
        let ll = (n.max(2) as f64).log2().log2();
        let stages = (ll.ceil() as i64).max(1) as usize;
        let raw: Vec<f64> = (1..=stages).map(|t| 0.75f64.powi(t as i32)).collect();
        let total: f64 = raw.iter().sum();
        let fractions = raw
            .iter()
            .map(|r| r / total * (1.0 - DEFAULT_FINAL_FRACTION))
            .collect();
        Self {
            stages,
            stage_budget_fractions: fractions,
            final_threshold_multiplier: DEFAULT_THRESHOLD_MULTIPLIER,
        }
    }

    pub fn final_fraction(&self) -> f64 {
        (1.0 - self.stage_budget_fractions.iter().sum::<f64>()).max(0.0)
    }
}

/// Survivors of distillation and their final observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DsOutcome {
    pub survivors: Vec<usize>,
    pub final_observations: BTreeMap<usize, f64>,
    /// Precision of each final observation.
    pub final_precision: f64,
}

impl DsOutcome {
    /// `√(2 ln max(|survivors|, 2)) · multiplier`, in standard-deviation units.
    pub fn threshold(&self, multiplier: f64) -> f64 {
        (2.0 * (self.survivors.len().max(2) as f64).ln()).sqrt() * multiplier
    }

    /// Survivors whose standardized final observation exceeds the threshold.
    pub fn detections(&self, multiplier: f64) -> BTreeSet<usize> {
        let thr = self.threshold(multiplier);
        let scale = self.final_precision.sqrt();
        self.final_observations
            .iter()
            .filter(|(_, &y)| y * scale > thr)
            .map(|(&i, _)| i)
            .collect()
    }

    /// Max-statistic test: reject iff some survivor crosses the threshold.
    pub fn rejects_null(&self, multiplier: f64) -> bool {
        let thr = self.threshold(multiplier);
        let scale = self.final_precision.sqrt();
        self.final_observations.values().any(|&y| y * scale > thr)
    }
}

pub(crate) fn distill(
    session: &mut SensingSession<'_>,
    candidates: &[usize],
    m: f64,
    params: &DsParams,
    rng: &mut SimRng,
) -> Result<DsOutcome, SensingError> {
    let mut survivors: Vec<usize> = candidates.to_vec();
    let mut last: BTreeMap<usize, f64> = BTreeMap::new();
    let mut last_precision = 0.0;
    for &fraction in &params.stage_budget_fractions {
        if survivors.is_empty() {
            break;
        }
        let precision = fraction * m / survivors.len() as f64;
        last.clear();
        let mut next = Vec::with_capacity(survivors.len() / 2 + 1);
        for &i in &survivors {
            let y = session.observe(i, precision, rng)?;
            if y >= 0.0 {
                next.push(i);
                last.insert(i, y);
            }
        }
        survivors = next;
        last_precision = precision;
    }
    let remainder = params.final_fraction() * m;
    if !survivors.is_empty() && remainder > 1e-12 * m {
        let precision = remainder / survivors.len() as f64;
        last.clear();
        for &i in &survivors {
            last.insert(i, session.observe(i, precision, rng)?);
        }
        last_precision = precision;
    }
    Ok(DsOutcome {
        survivors,
        final_observations: last,
        final_precision: last_precision,
    })
}

/// Distilled sensing over `candidates`: each stage splits its share of the
/// budget evenly over the current survivors, and only entries observed
/// non-negative survive to the next stage.
pub fn distilled_sensing(
    signal: &SparseSignal,
    candidates: &[usize],
    m: f64,
    params: &DsParams,
    rng: &mut SimRng,
) -> Result<(DsOutcome, SensingTrace), SensingError> {
    params.validate()?;
    if candidates.is_empty() {
        return Err(SensingError::InvalidParams("ds: no candidates".into()));
    }
    let mut session = SensingSession::hard(signal, m, rng)?;
    let out = distill(&mut session, candidates, m, params, rng)?;
    Ok((out, session.into_trace()))
}

/// Distilled sensing over all entries; the estimate is the set of final
/// detections.
#[derive(Debug, Clone)]
pub struct DsStrategy {
    budget: f64,
    params: DsParams,
}

impl DsStrategy {
    pub fn new(budget: f64, params: DsParams) -> Result<Self, SensingError> {
        params.validate()?;
        if !(budget > 0.0) {
            return Err(SensingError::InvalidParams(format!("ds: budget {budget}")));
        }
        Ok(Self { budget, params })
    }
}

impl Strategy for DsStrategy {
    fn id(&self) -> String {
        "ds".into()
    }

    fn run(&self, signal: &SparseSignal, rng: &mut SimRng) -> Result<Outcome, SensingError> {
        let all: Vec<usize> = (0..signal.n()).collect();
        let (out, trace) = distilled_sensing(signal, &all, self.budget, &self.params, rng)?;
        Ok(Outcome::Estimate(EstimateOutcome {
            estimate: out.detections(self.params.final_threshold_multiplier),
            trace,
            truncated: false,
        }))
    }
}
