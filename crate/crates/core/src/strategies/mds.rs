use rand::seq::index;

use crate::error::SensingError;
use crate::rng::SimRng;
use crate::sensing::{SensingSession, SparseSignal};

use super::ds::{distill, DsParams};
use super::{DetectOutcome, Outcome, Strategy};

pub const MDS_MIN_DIMENSION: usize = 16;

fn triple_log(n: usize) -> f64 {
    (n as f64).ln().ln().ln()
}

/// `ñ = ⌈2 n lnlnln(n) / s⌉`, capped at `n`.
pub fn mds_subsample_size(n: usize, s: usize) -> usize {
    let raw = (2.0 * n as f64 * triple_log(n) / s as f64).ceil();
    if raw.is_nan() || raw < 1.0 {
        1
    } else {
        (raw as usize).min(n)
    }
}

/// `size` entries of `0..n` drawn uniformly without replacement, sorted.
pub fn mds_subsample(n: usize, size: usize, rng: &mut SimRng) -> Vec<usize> {
    let mut v = index::sample(rng, n, size.min(n)).into_vec();
    v.sort_unstable();
    v
}

/// Subsampled distilled sensing: draw `ñ` entries uniformly without
/// replacement, run distilled sensing on them with the full budget, and
/// reject the null iff the final max-statistic test fires.
pub fn mds_detect(
    signal: &SparseSignal,
    s: usize,
    m: f64,
    ds: &DsParams,
    rng: &mut SimRng,
) -> Result<DetectOutcome, SensingError> {
    let n = signal.n();
    if n < MDS_MIN_DIMENSION {
        return Err(SensingError::InvalidDimension {
            n,
            reason: "subsampled detection needs n >= 16 so that lnlnln n > 0",
        });
    }
    if s == 0 {
        return Err(SensingError::InvalidParams("mds: sparsity must be >= 1".into()));
    }
    ds.validate()?;
    let mut session = SensingSession::hard(signal, m, rng)?;
    let subsample = mds_subsample(n, mds_subsample_size(n, s), rng);
    let out = distill(&mut session, &subsample, m, ds, rng)?;
    Ok(DetectOutcome {
        decision: out.rejects_null(ds.final_threshold_multiplier),
        trace: session.into_trace(),
    })
}

#[derive(Debug, Clone)]
pub struct MdsStrategy {
    sparsity: usize,
    budget: f64,
    params: DsParams,
}

impl MdsStrategy {
    pub fn new(sparsity: usize, budget: f64, params: DsParams) -> Result<Self, SensingError> {
        params.validate()?;
        if sparsity == 0 || !(budget > 0.0) {
            return Err(SensingError::InvalidParams(format!(
                "mds: sparsity {sparsity}, budget {budget}"
            )));
        }
        Ok(Self {
            sparsity,
            budget,
            params,
        })
    }
}

impl Strategy for MdsStrategy {
    fn id(&self) -> String {
        "mds".into()
    }

    fn run(&self, signal: &SparseSignal, rng: &mut SimRng) -> Result<Outcome, SensingError> {
        mds_detect(signal, self.sparsity, self.budget, &self.params, rng).map(Outcome::Detect)
    }

    fn estimates_support(&self) -> bool {
        false
    }
}
