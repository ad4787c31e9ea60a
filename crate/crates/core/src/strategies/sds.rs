use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::SensingError;
use crate::rng::SimRng;
use crate::sensing::{SensingSession, SparseSignal};

use super::{EstimateOutcome, Outcome, Strategy};

/// Parameters of Simple Distilled Sensing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdsParams {
    /// Maximum number of measurements per entry, `l`.
    pub steps: usize,
    /// Precision of every measurement, `p`.
    pub precision: f64,
}

impl SdsParams {
    pub fn new(steps: usize, precision: f64) -> Result<Self, SensingError> {
        if steps == 0 || !(precision > 0.0 && precision.is_finite()) {
            return Err(SensingError::InvalidParams(format!(
                "sds: steps {steps} must be >= 1 and precision {precision} > 0"
            )));
        }
        Ok(Self { steps, precision })
    }

    /// `p = m/(4n)` and `l = (log₂ n)²` rounded to the nearest integer ≥ 1.
    pub fn defaults(n: usize, m: f64) -> Result<Self, SensingError> {
        let l = (n as f64).log2().powi(2).round().max(1.0) as usize;
        Self::new(l, m / (4.0 * n as f64))
    }
}

/// Simple Distilled Sensing.
///
/// Entries are scanned in order. Entry `i` is measured repeatedly at
/// precision `p` until its counter `c_i` reaches `l` or an observation is
/// negative; it joins `Ŝ` iff all `l` observations were non-negative. The
/// whole procedure stops, returning the current `Ŝ`, as soon as one more
/// measurement would bring the spent precision `p(k+1)` above `m`.
pub fn simple_distilled_sensing(
    signal: &SparseSignal,
    m: f64,
    params: &SdsParams,
    rng: &mut SimRng,
) -> Result<EstimateOutcome, SensingError> {
    let SdsParams {
        steps: l,
        precision: p,
    } = *params;
    let mut session = SensingSession::hard(signal, m, rng)?;
    let mut estimate = BTreeSet::new();
    // a single measurement already overdraws the budget
    if p > m {
        return Ok(EstimateOutcome {
            estimate,
            trace: session.into_trace(),
            truncated: true,
        });
    }
    let mut k: u64 = 0;
    for i in 0..signal.n() {
        let mut c = 0;
        let last = loop {
            k += 1;
            c += 1;
            let y = session.observe(i, p, rng)?;
            if p * (k + 1) as f64 > m {
                return Ok(EstimateOutcome {
                    estimate,
                    trace: session.into_trace(),
                    truncated: true,
                });
            }
            if c == l || y < 0.0 {
                break y;
            }
        };
        if c == l && last >= 0.0 {
            estimate.insert(i);
        }
    }
    Ok(EstimateOutcome {
        estimate,
        trace: session.into_trace(),
        truncated: false,
    })
}

#[derive(Debug, Clone)]
pub struct SdsStrategy {
    budget: f64,
    params: SdsParams,
}

impl SdsStrategy {
    pub fn new(budget: f64, params: SdsParams) -> Result<Self, SensingError> {
        SdsParams::new(params.steps, params.precision)?;
        if !(budget > 0.0) {
            return Err(SensingError::InvalidParams(format!("sds: budget {budget}")));
        }
        Ok(Self { budget, params })
    }

    pub fn params(&self) -> &SdsParams {
        &self.params
    }
}

impl Strategy for SdsStrategy {
    fn id(&self) -> String {
        "sds".into()
    }

    fn run(&self, signal: &SparseSignal, rng: &mut SimRng) -> Result<Outcome, SensingError> {
        simple_distilled_sensing(signal, self.budget, &self.params, rng).map(Outcome::Estimate)
    }
}
