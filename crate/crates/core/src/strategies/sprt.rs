use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::SensingError;
use crate::rng::SimRng;
use crate::sensing::{SensingSession, SparseSignal};

use super::{EstimateOutcome, Outcome, Strategy};

/// Calibration of the per-entry sequential probability ratio tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprtParams {
    /// Precision `δ` of each measurement.
    pub step_precision: f64,
    /// Accept `x_i = μ` once the log-LR reaches `upper`.
    pub upper: f64,
    /// Accept `x_i = 0` once the log-LR falls to `lower`.
    pub lower: f64,
    pub max_steps: usize,
}

impl SprtParams {
    pub fn new(step_precision: f64, upper: f64, lower: f64, max_steps: usize) -> Result<Self, SensingError> {
        let p = Self {
            step_precision,
            upper,
            lower,
            max_steps,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SensingError> {
        let ok = self.step_precision > 0.0
            && self.step_precision.is_finite()
            && self.lower <= 0.0
            && self.upper >= 0.0
            && self.lower < self.upper
            && self.max_steps >= 1;
        if ok {
            Ok(())
        } else {
            Err(SensingError::InvalidParams(format!("sprt: {self:?}")))
        }
    }

    /// Wald thresholds sized to a per-entry error budget of `ε/(n-s)` for
    /// false alarms and `ε/s` for misses: `a = ln((n-s)/ε)`, `b = -ln(s/ε)`,
    /// `δ = m/(4n)`, `max_steps = ⌈4 max(a, -b) / (μ² δ)⌉`.
    pub fn defaults(n: usize, s: usize, m: f64, epsilon: f64, amplitude: f64) -> Result<Self, SensingError> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(SensingError::InvalidParams(format!("sprt: epsilon {epsilon} outside (0, 1]")));
        }
        if s == 0 || s >= n {
            return Err(SensingError::InvalidParams(format!("sprt: sparsity {s} outside 1..{n}")));
        }
        if !(amplitude > 0.0) {
            return Err(SensingError::InvalidParams(format!("sprt: amplitude {amplitude} must be positive")));
        }
        let delta = m / (4.0 * n as f64);
        let upper = ((n - s) as f64 / epsilon).ln();
        let lower = -(s as f64 / epsilon).ln();
        let max_steps = (4.0 * upper.max(-lower) / (amplitude * amplitude * delta)).ceil().max(1.0) as usize;
        Self::new(delta, upper, lower, max_steps)
    }
}

/// One SPRT per entry, run in parallel rounds: every round measures each
/// undecided entry once at precision `δ` and adds the exact per-entry log-LR
/// increment `μδy - μ²δ/2`. Entries crossing `upper` join `Ŝ`; entries that
/// hit `max_steps` undecided are left out. The run stops, with
/// `truncated = true`, once the next measurement would exceed the budget.
pub fn parallel_sprt_estimate(
    signal: &SparseSignal,
    m: f64,
    amplitude: f64,
    params: &SprtParams,
    rng: &mut SimRng,
) -> Result<EstimateOutcome, SensingError> {
    params.validate()?;
    let n = signal.n();
    let delta = params.step_precision;
    let drift = 0.5 * amplitude * amplitude * delta;
    let mut session = SensingSession::hard(signal, m, rng)?;
    let mut llr = vec![0.0f64; n];
    let mut steps = vec![0usize; n];
    let mut estimate = BTreeSet::new();
    let mut active: Vec<usize> = (0..n).collect();
    let mut truncated = false;
    'rounds: while !active.is_empty() {
        let mut still = Vec::with_capacity(active.len());
        for (pos, &i) in active.iter().enumerate() {
            if !session.ledger().can_afford(delta) {
                truncated = true;
                still.extend_from_slice(&active[pos..]);
                break 'rounds;
            }
            let y = session.observe(i, delta, rng)?;
            llr[i] += amplitude * delta * y - drift;
            steps[i] += 1;
            if llr[i] >= params.upper {
                estimate.insert(i);
            } else if llr[i] > params.lower && steps[i] < params.max_steps {
                still.push(i);
            }
        }
        active = still;
    }
    Ok(EstimateOutcome {
        estimate,
        trace: session.into_trace(),
        truncated,
    })
}

#[derive(Debug, Clone)]
pub struct SprtStrategy {
    budget: f64,
    amplitude: f64,
    params: SprtParams,
}

impl SprtStrategy {
    pub fn new(budget: f64, amplitude: f64, params: SprtParams) -> Result<Self, SensingError> {
        params.validate()?;
        if !(budget > 0.0) || !(amplitude > 0.0) {
            return Err(SensingError::InvalidParams(format!(
                "sprt: budget {budget}, amplitude {amplitude}"
            )));
        }
        Ok(Self {
            budget,
            amplitude,
            params,
        })
    }
}

impl Strategy for SprtStrategy {
    fn id(&self) -> String {
        "sprt".into()
    }

    fn run(&self, signal: &SparseSignal, rng: &mut SimRng) -> Result<Outcome, SensingError> {
        parallel_sprt_estimate(signal, self.budget, self.amplitude, &self.params, rng).map(Outcome::Estimate)
    }
}
