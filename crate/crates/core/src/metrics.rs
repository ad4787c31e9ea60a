//! Error metrics for support estimates and Monte Carlo risk estimators.
//!
//! Detection risks combine the null false-alarm probability `p_∅` with the
//! miss probabilities `P_S(Φ̂ ≠ 1)`:
//!
//! * `R  = p_∅ + max_S P_S(Φ̂ ≠ 1)`
//! * `R̃ = max(p_∅, max_S P_S(Φ̂ ≠ 1))`
//! * `R̄ = p_∅ + mean_S P_S(Φ̂ ≠ 1)`
//!
//! For the implicit class of all `s`-subsets the worst case is approximated
//! by the maximum over a grid of uniformly drawn supports. This is exact in
//! distribution for symmetrized procedures, for which every support has the
//! same risk; for other procedures the sampled maximum can under-estimate the
//! true worst case.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SensingError;
use crate::rng::{mix64, SimRng};
use crate::sensing::{SparseSignal, SupportClass};
use crate::strategies::Strategy;
use crate::tally::Tally;

pub const DEFAULT_SUPPORT_GRID: usize = 32;

/// `|Ŝ Δ S|`.
pub fn sym_diff_error(estimate: &BTreeSet<usize>, truth: &BTreeSet<usize>) -> usize {
    estimate.symmetric_difference(truth).count()
}

/// `|Ŝ \ S| / |Ŝ|`, with `0/0 = 0`.
pub fn fdr(estimate: &BTreeSet<usize>, truth: &BTreeSet<usize>) -> f64 {
    if estimate.is_empty() {
        return 0.0;
    }
    estimate.difference(truth).count() as f64 / estimate.len() as f64
}

/// `|S \ Ŝ| / |S|`, with `0/0 = 0`.
pub fn ndr(estimate: &BTreeSet<usize>, truth: &BTreeSet<usize>) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    truth.difference(estimate).count() as f64 / truth.len() as f64
}

/// The supports a risk estimate is evaluated on: every member of an explicit
/// class, or `grid_size` uniform draws from the implicit one.
pub fn support_grid(class: &SupportClass, grid_size: usize, seed: u64) -> Vec<Vec<usize>> {
    match class.members() {
        Some(m) => m.to_vec(),
        None => {
            let mut rng = SimRng::new(mix64(seed ^ 0x5eed_5eed), u64::MAX);
            (0..grid_size.max(1)).map(|_| class.sample(&mut rng)).collect()
        }
    }
}

/// Data-generating signal for `support` at `amplitude`. At amplitude 0 the
/// alternative coincides with the null.
fn alternative(n: usize, support: &[usize], amplitude: f64) -> Result<SparseSignal, SensingError> {
    if amplitude == 0.0 {
        SparseSignal::null(n)
    } else {
        SparseSignal::new(n, support.iter().copied(), amplitude)
    }
}

fn check_trials(trials: usize) -> Result<(), SensingError> {
    if trials < 2 {
        return Err(SensingError::InvalidParams("at least 2 trials required".into()));
    }
    Ok(())
}

/// Stream used for hypothesis `h` (0 is the null, `j + 1` the `j`-th support).
fn hypothesis_seed(seed: u64, h: usize) -> u64 {
    mix64(seed.wrapping_add(mix64(h as u64)))
}

/// Number of trials, out of `trials`, on which `f` holds.
fn count_events<F>(trials: usize, seed: u64, f: F) -> Result<u64, SensingError>
where
    F: Fn(&mut SimRng) -> Result<bool, SensingError> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = SimRng::new(seed, t as u64);
            f(&mut rng).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRiskTriple {
    pub risk_sum: f64,
    pub risk_max: f64,
    pub risk_bayes: f64,
    /// `P_∅(Φ̂ ≠ 0)`.
    pub p_null: f64,
    /// `P_S(Φ̂ ≠ 1)` for each support of the grid, in grid order.
    pub misses: Vec<f64>,
    pub se_risk_sum: f64,
    pub se_risk_max: f64,
    pub se_risk_bayes: f64,
    pub se_p_null: f64,
    /// Trials per hypothesis.
    pub trials: usize,
}

fn binomial_se(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

impl DetectionRiskTriple {
    /// Assembles the triple from error counts, each out of `trials` runs.
    ///
    /// Every probability is a single correctly rounded quotient of integers,
    /// so the ordering `R̄ ≤ R ≤ 2R̃ ≤ 2R` holds exactly in floating point.
    pub fn from_counts(null_errors: u64, miss_counts: &[u64], trials: usize) -> Self {
        assert!(trials > 0 && !miss_counts.is_empty());
        let t = trials as f64;
        let p_null = null_errors as f64 / t;
        let misses: Vec<f64> = miss_counts.iter().map(|&c| c as f64 / t).collect();
        let worst_idx = (0..miss_counts.len())
            .max_by_key(|&j| (miss_counts[j], std::cmp::Reverse(j)))
            .unwrap_or(0);
        let worst = misses[worst_idx];
        let total_miss: u64 = miss_counts.iter().sum();
        let mean_miss = total_miss as f64 / (t * miss_counts.len() as f64);

        let se_null = binomial_se(p_null, trials);
        let se_worst = binomial_se(worst, trials);
        let se_mean = (misses.iter().map(|&p| p * (1.0 - p) / t).sum::<f64>())
            .sqrt()
            / miss_counts.len() as f64;
        Self {
            risk_sum: p_null + worst,
            risk_max: p_null.max(worst),
            risk_bayes: p_null + mean_miss,
            p_null,
            se_risk_sum: se_null.hypot(se_worst),
            se_risk_max: if p_null >= worst { se_null } else { se_worst },
            se_risk_bayes: se_null.hypot(se_mean),
            se_p_null: se_null,
            misses,
            trials,
        }
    }

    pub fn worst_miss(&self) -> f64 {
        self.misses.iter().copied().fold(0.0, f64::max)
    }

    /// `R̄ ≤ R ≤ 2R̃ ≤ 2R`.
    pub fn chain_holds(&self) -> bool {
        self.risk_bayes <= self.risk_sum
            && self.risk_sum <= 2.0 * self.risk_max
            && 2.0 * self.risk_max <= 2.0 * self.risk_sum
    }
}

/// Monte Carlo estimate of the detection risks of `strategy` against the
/// alternatives in `class`, all with amplitude `amplitude`.
pub fn detection_risk(
    strategy: &dyn Strategy,
    class: &SupportClass,
    amplitude: f64,
    trials: usize,
    grid_size: usize,
    seed: u64,
) -> Result<DetectionRiskTriple, SensingError> {
    check_trials(trials)?;
    let n = class.n();
    let null = SparseSignal::null(n)?;
    let null_errors = count_events(trials, hypothesis_seed(seed, 0), |rng| {
        Ok(strategy.run(&null, rng)?.decision())
    })?;
    let grid = support_grid(class, grid_size, seed);
    let mut misses = Vec::with_capacity(grid.len());
    for (j, support) in grid.iter().enumerate() {
        let signal = alternative(n, support, amplitude)?;
        misses.push(count_events(trials, hypothesis_seed(seed, j + 1), |rng| {
            Ok(!strategy.run(&signal, rng)?.decision())
        })?);
    }
    Ok(DetectionRiskTriple::from_counts(null_errors, &misses, trials))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationErrorReport {
    pub mean_sym_diff: f64,
    pub fdr: f64,
    pub ndr: f64,
    /// `P(Ŝ ≠ S)`.
    pub exact_fail: f64,
    pub se_mean_sym_diff: f64,
    pub se_fdr: f64,
    pub se_ndr: f64,
    pub se_exact_fail: f64,
    /// Trials per support.
    pub trials: usize,
}

/// Per-support accumulators of the four estimation metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EstimationTally {
    pub sym_diff: Tally,
    pub fdr: Tally,
    pub ndr: Tally,
    pub exact_fail: Tally,
}

impl EstimationTally {
    pub fn push(&mut self, estimate: &BTreeSet<usize>, truth: &BTreeSet<usize>) {
        let d = sym_diff_error(estimate, truth);
        self.sym_diff.push(d as f64);
        self.fdr.push(fdr(estimate, truth));
        self.ndr.push(ndr(estimate, truth));
        self.exact_fail.push(if d > 0 { 1.0 } else { 0.0 });
    }

    pub fn merge(mut self, other: &EstimationTally) -> Self {
        self.sym_diff.merge(&other.sym_diff);
        self.fdr.merge(&other.fdr);
        self.ndr.merge(&other.ndr);
        self.exact_fail.merge(&other.exact_fail);
        self
    }
}

/// Field-wise worst case over the supports of the grid.
fn worst_case(tallies: &[EstimationTally], trials: usize) -> EstimationErrorReport {
    fn worst(ts: &[Tally]) -> (f64, f64) {
        ts.iter()
            .map(|t| (t.mean(), t.std_error()))
            .fold((f64::NEG_INFINITY, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc })
    }
    let pick = |f: fn(&EstimationTally) -> Tally| worst(&tallies.iter().map(f).collect::<Vec<_>>());
    let (mean_sym_diff, se_mean_sym_diff) = pick(|t| t.sym_diff);
    let (fdr, se_fdr) = pick(|t| t.fdr);
    let (ndr, se_ndr) = pick(|t| t.ndr);
    let (exact_fail, se_exact_fail) = pick(|t| t.exact_fail);
    EstimationErrorReport {
        mean_sym_diff,
        fdr,
        ndr,
        exact_fail,
        se_mean_sym_diff,
        se_fdr,
        se_ndr,
        se_exact_fail,
        trials,
    }
}

/// Monte Carlo estimate of the estimation errors of `strategy`, maximized
/// over the support grid of `class`.
pub fn estimation_risk(
    strategy: &dyn Strategy,
    class: &SupportClass,
    amplitude: f64,
    trials: usize,
    grid_size: usize,
    seed: u64,
) -> Result<EstimationErrorReport, SensingError> {
    check_trials(trials)?;
    if !strategy.estimates_support() {
        return Err(SensingError::InvalidParams(format!(
            "strategy `{}` does not estimate a support",
            strategy.id()
        )));
    }
    let n = class.n();
    let grid = support_grid(class, grid_size, seed);
    let mut tallies = Vec::with_capacity(grid.len());
    for (j, support) in grid.iter().enumerate() {
        let signal = alternative(n, support, amplitude)?;
        let truth: BTreeSet<usize> = support.iter().copied().collect();
        let hseed = hypothesis_seed(seed, j + 1);
        let tally = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = SimRng::new(hseed, t as u64);
                let out = strategy.run(&signal, &mut rng)?;
                let mut acc = EstimationTally::default();
                acc.push(out.estimate().expect("estimator"), &truth);
                Ok(acc)
            })
            .try_reduce(EstimationTally::default, |a, b| Ok(a.merge(&b)))?;
        tallies.push(tally);
    }
    Ok(worst_case(&tallies, trials))
}
