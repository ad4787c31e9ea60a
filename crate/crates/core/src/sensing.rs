//! Ground-truth signals, support classes, the budgeted observation engine and
//! exact likelihood ratios.
//!
//! Indices are 0-based inside the crate. Every external format (trace CSV,
//! reports, CLI) writes them 1-based.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::SensingError;
use crate::rng::SimRng;
use crate::strategies::Strategy;
use crate::tally::Tally;

/// Relative slack allowed when comparing accumulated precision to the budget.
pub const BUDGET_REL_TOL: f64 = 1e-12;

/// Constant-amplitude sparse signal: `x_i = μ` on the support, 0 elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    n: usize,
    support: Vec<usize>,
    mask: Vec<bool>,
    amplitude: f64,
}

impl SparseSignal {
    pub fn new(
        n: usize,
        support: impl IntoIterator<Item = usize>,
        amplitude: f64,
    ) -> Result<Self, SensingError> {
        if n == 0 {
            return Err(SensingError::InvalidDimension {
                n,
                reason: "dimension must be positive",
            });
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(SensingError::InvalidSignal(format!(
                "amplitude must be finite and non-negative, got {amplitude}"
            )));
        }
        let mut mask = vec![false; n];
        let mut support: Vec<usize> = support.into_iter().collect();
        support.sort_unstable();
        support.dedup();
        for &i in &support {
            if i >= n {
                return Err(SensingError::InvalidSignal(format!(
                    "support index {} outside 1..={n}",
                    i + 1
                )));
            }
            mask[i] = true;
        }
        if amplitude == 0.0 && !support.is_empty() {
            return Err(SensingError::InvalidSignal(
                "zero amplitude is only allowed for the null signal".into(),
            ));
        }
        Ok(Self {
            n,
            support,
            mask,
            amplitude,
        })
    }

    /// The null signal `S = ∅`.
    pub fn null(n: usize) -> Result<Self, SensingError> {
        Self::new(n, std::iter::empty(), 0.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn support_set(&self) -> BTreeSet<usize> {
        self.support.iter().copied().collect()
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.contains(i) {
            self.amplitude
        } else {
            0.0
        }
    }

    /// Smallest non-zero magnitude, `None` for the null signal.
    pub fn x_min(&self) -> Option<f64> {
        (!self.support.is_empty()).then_some(self.amplitude)
    }

    /// Signal seen through the relabeling `i -> perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self, SensingError> {
        if perm.len() != self.n {
            return Err(SensingError::InvalidParams(format!(
                "permutation of length {} for dimension {}",
                perm.len(),
                self.n
            )));
        }
        Self::new(self.n, self.support.iter().map(|&i| perm[i]), self.amplitude)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassMembers {
    /// Every `s`-subset of `{1..n}`; never enumerated.
    AllSubsets,
    Explicit(Vec<Vec<usize>>),
}

/// A class of candidate supports, all of the same cardinality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportClass {
    n: usize,
    s: usize,
    members: ClassMembers,
}

impl SupportClass {
    pub fn all_subsets(n: usize, s: usize) -> Result<Self, SensingError> {
        if s == 0 || s > n {
            return Err(SensingError::InvalidClass(format!(
                "cardinality {s} must lie in 1..={n}"
            )));
        }
        Ok(Self {
            n,
            s,
            members: ClassMembers::AllSubsets,
        })
    }

    pub fn explicit(n: usize, members: Vec<Vec<usize>>) -> Result<Self, SensingError> {
        let first = members
            .first()
            .ok_or_else(|| SensingError::InvalidClass("class has no members".into()))?;
        let s = first.len();
        if s == 0 {
            return Err(SensingError::InvalidClass("empty member set".into()));
        }
        let mut sorted = Vec::with_capacity(members.len());
        for m in members {
            let mut m = m;
            m.sort_unstable();
            m.dedup();
            if m.len() != s {
                return Err(SensingError::InvalidClass(format!(
                    "member of cardinality {} in a class of cardinality {s}",
                    m.len()
                )));
            }
            if let Some(&bad) = m.iter().find(|&&i| i >= n) {
                return Err(SensingError::InvalidClass(format!(
                    "index {} outside 1..={n}",
                    bad + 1
                )));
            }
            sorted.push(m);
        }
        Ok(Self {
            n,
            s,
            members: ClassMembers::Explicit(sorted),
        })
    }

    /// Explicit enumeration of all `s`-subsets, for small `n`.
    pub fn enumerate_all_subsets(n: usize, s: usize) -> Result<Self, SensingError> {
        Self::explicit(n, combinations(n, s))
    }

    /// Cyclic intervals `{i, i+1, .., i+s-1 mod n}` for `i` in `0..n`.
    pub fn cyclic_intervals(n: usize, s: usize) -> Result<Self, SensingError> {
        if s == 0 || s > n {
            return Err(SensingError::InvalidClass(format!(
                "interval length {s} must lie in 1..={n}"
            )));
        }
        let members = (0..n)
            .map(|start| (0..s).map(|j| (start + j) % n).collect())
            .collect();
        Self::explicit(n, members)
    }

    /// The classes of cardinality `s-1`, `s`, `s+1` (those that exist).
    pub fn extended(n: usize, s: usize) -> Vec<SupportClass> {
        [s.checked_sub(1), Some(s), Some(s + 1)]
            .into_iter()
            .flatten()
            .filter_map(|k| Self::all_subsets(n, k).ok())
            .collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cardinality(&self) -> usize {
        self.s
    }

    pub fn members(&self) -> Option<&[Vec<usize>]> {
        match &self.members {
            ClassMembers::AllSubsets => None,
            ClassMembers::Explicit(m) => Some(m),
        }
    }

    pub fn is_implicit(&self) -> bool {
        matches!(self.members, ClassMembers::AllSubsets)
    }

    /// Ξ, the union of all members.
    pub fn xi(&self) -> Vec<usize> {
        match &self.members {
            ClassMembers::AllSubsets => (0..self.n).collect(),
            ClassMembers::Explicit(m) => {
                let set: BTreeSet<usize> = m.iter().flatten().copied().collect();
                set.into_iter().collect()
            }
        }
    }

    pub fn xi_size(&self) -> usize {
        match &self.members {
            ClassMembers::AllSubsets => self.n,
            ClassMembers::Explicit(_) => self.xi().len(),
        }
    }

    /// Every element of Ξ lies in the same fraction `s/|Ξ|` of the members.
    /// Decided with integer counts, so the comparison is exact.
    pub fn is_symmetric(&self) -> bool {
        let members = match &self.members {
            ClassMembers::AllSubsets => return true,
            ClassMembers::Explicit(m) => m,
        };
        let mut counts = vec![0u64; self.n];
        for m in members {
            for &i in m {
                counts[i] += 1;
            }
        }
        let xi = counts.iter().filter(|&&c| c > 0).count() as u64;
        let target = self.s as u64 * members.len() as u64;
        counts.iter().filter(|&&c| c > 0).all(|&c| c * xi == target)
    }

    pub fn is_full_range(&self) -> bool {
        self.xi_size() == self.n
    }

    /// A member drawn uniformly at random.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        match &self.members {
            ClassMembers::AllSubsets => {
                let mut v = index::sample(rng, self.n, self.s).into_vec();
                v.sort_unstable();
                v
            }
            ClassMembers::Explicit(m) => m[rng.random_range(0..m.len())].clone(),
        }
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BudgetMode {
    /// `∑ γ_k² ≤ m` must hold on every run.
    #[default]
    Hard,
    /// Only the expectation is constrained; overruns are recorded.
    Expected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    total: f64,
    spent: f64,
    mode: BudgetMode,
    overrun: bool,
}

impl BudgetLedger {
    pub fn new(total: f64, mode: BudgetMode) -> Result<Self, SensingError> {
        if !(total > 0.0 && total.is_finite()) {
            return Err(SensingError::InvalidParams(format!(
                "budget must be positive and finite, got {total}"
            )));
        }
        Ok(Self {
            total,
            spent: 0.0,
            mode,
            overrun: false,
        })
    }

    pub fn hard(total: f64) -> Result<Self, SensingError> {
        Self::new(total, BudgetMode::Hard)
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn remaining(&self) -> f64 {
        (self.total - self.spent).max(0.0)
    }

    pub fn mode(&self) -> BudgetMode {
        self.mode
    }

    pub fn overrun(&self) -> bool {
        self.overrun
    }

    pub fn can_afford(&self, precision: f64) -> bool {
        self.spent + precision <= self.total * (1.0 + BUDGET_REL_TOL)
    }

    fn charge(&mut self, precision: f64) -> Result<(), SensingError> {
        if !self.can_afford(precision) {
            match self.mode {
                BudgetMode::Hard => {
                    return Err(SensingError::BudgetExceeded {
                        spent: self.spent,
                        requested: precision,
                        total: self.total,
                    })
                }
                BudgetMode::Expected => self.overrun = true,
            }
        }
        self.spent += precision;
        Ok(())
    }
}

/// One measurement: index `k` (1-based), action, precision `γ²`, observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingRecord {
    pub k: usize,
    pub action: usize,
    pub precision: f64,
    pub y: f64,
}

/// The data `D` collected by one run of a strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingTrace {
    pub records: Vec<SensingRecord>,
    pub ledger: BudgetLedger,
    pub seed: u64,
    pub stream: u64,
}

impl SensingTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_precision(&self) -> f64 {
        self.records.iter().map(|r| r.precision).sum()
    }

    /// Precision spent on each entry.
    pub fn precision_by_entry(&self, n: usize) -> Vec<f64> {
        let mut b = vec![0.0; n];
        for r in &self.records {
            b[r.action] += r.precision;
        }
        b
    }

    /// Number of measurements taken of each entry.
    pub fn counts_by_entry(&self, n: usize) -> Vec<usize> {
        let mut c = vec![0; n];
        for r in &self.records {
            c[r.action] += 1;
        }
        c
    }

    /// `k,a,gamma2,y` with 1-based actions and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,a,gamma2,y\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e}",
                r.k,
                r.action + 1,
                r.precision,
                r.y
            );
        }
        out
    }

    /// Parses the CSV written by [`SensingTrace::to_csv`]. The ledger is
    /// rebuilt in expected mode against `total`.
    pub fn from_csv(text: &str, total: f64) -> Result<Self, SensingError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "k,a,gamma2,y" => {}
            other => {
                return Err(SensingError::InvalidParams(format!(
                    "bad trace header {other:?}"
                )))
            }
        }
        let mut ledger = BudgetLedger::new(total, BudgetMode::Expected)?;
        let mut records = Vec::new();
        for (lineno, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = || SensingError::InvalidParams(format!("bad trace line {}", lineno + 2));
            let mut f = line.split(',');
            let k: usize = f.next().and_then(|v| v.trim().parse().ok()).ok_or_else(bad)?;
            let a: usize = f.next().and_then(|v| v.trim().parse().ok()).ok_or_else(bad)?;
            let precision: f64 = f.next().and_then(|v| v.trim().parse().ok()).ok_or_else(bad)?;
            let y: f64 = f.next().and_then(|v| v.trim().parse().ok()).ok_or_else(bad)?;
            if a == 0 {
                return Err(bad());
            }
            ledger.charge(precision)?;
            records.push(SensingRecord {
                k,
                action: a - 1,
                precision,
                y,
            });
        }
        Ok(Self {
            records,
            ledger,
            seed: 0,
            stream: 0,
        })
    }
}

/// A running measurement session against one signal.
#[derive(Debug)]
pub struct SensingSession<'a> {
    signal: &'a SparseSignal,
    ledger: BudgetLedger,
    records: Vec<SensingRecord>,
    seed: u64,
    stream: u64,
}

impl<'a> SensingSession<'a> {
    pub fn new(signal: &'a SparseSignal, ledger: BudgetLedger, rng: &SimRng) -> Self {
        Self {
            signal,
            ledger,
            records: Vec::new(),
            seed: rng.seed(),
            stream: rng.stream(),
        }
    }

    pub fn hard(signal: &'a SparseSignal, budget: f64, rng: &SimRng) -> Result<Self, SensingError> {
        Ok(Self::new(signal, BudgetLedger::hard(budget)?, rng))
    }

    pub fn n(&self) -> usize {
        self.signal.n()
    }

    pub fn ledger(&self) -> &BudgetLedger {
        &self.ledger
    }

    pub fn measurements(&self) -> usize {
        self.records.len()
    }

    /// Measures entry `action` at precision `γ²`: returns `x_a + γ^{-1} Z`.
    pub fn observe(
        &mut self,
        action: usize,
        precision: f64,
        rng: &mut SimRng,
    ) -> Result<f64, SensingError> {
        if action >= self.signal.n() {
            return Err(SensingError::InvalidAction {
                action: action + 1,
                n: self.signal.n(),
            });
        }
        if !(precision > 0.0 && precision.is_finite()) {
            return Err(SensingError::InvalidPrecision(precision));
        }
        self.ledger.charge(precision)?;
        let z: f64 = rng.sample(StandardNormal);
        let y = self.signal.value(action) + z / precision.sqrt();
        self.records.push(SensingRecord {
            k: self.records.len() + 1,
            action,
            precision,
            y,
        });
        Ok(y)
    }

    pub fn into_trace(self) -> SensingTrace {
        SensingTrace {
            records: self.records,
            ledger: self.ledger,
            seed: self.seed,
            stream: self.stream,
        }
    }
}

/// Exact log-likelihood ratio `log f(D; s_a) / f(D; s_b)` for the Gaussian
/// observation model with amplitude `μ`.
pub fn log_likelihood_ratio(
    trace: &SensingTrace,
    s_a: &BTreeSet<usize>,
    s_b: &BTreeSet<usize>,
    amplitude: f64,
) -> f64 {
    let mu = amplitude;
    trace
        .records
        .iter()
        .map(|r| {
            let in_a = s_a.contains(&r.action);
            let in_b = s_b.contains(&r.action);
            if in_a == in_b {
                return 0.0;
            }
            // log-density of "entry is μ" against "entry is 0"
            let d = r.precision * (mu * r.y - 0.5 * mu * mu);
            if in_a {
                d
            } else {
                -d
            }
        })
        .sum()
}

/// `(μ²/2) ∑_k 1{a_k ∈ S} γ_k²`: the conditional expectation of the null
/// log-likelihood ratio against `S` given the actions of `trace`.
pub fn null_kl_given_actions(trace: &SensingTrace, support: &BTreeSet<usize>, amplitude: f64) -> f64 {
    let spent: f64 = trace
        .records
        .iter()
        .filter(|r| support.contains(&r.action))
        .map(|r| r.precision)
        .sum();
    0.5 * amplitude * amplitude * spent
}

/// Monte Carlo estimate of `E_∅[log LR_{∅,S}]` for `strategy`; returns
/// `(mean, standard error)`. Trial `t` uses stream `t` of `seed`.
pub fn empirical_kl_under_null(
    strategy: &dyn Strategy,
    n: usize,
    s_alt: &BTreeSet<usize>,
    amplitude: f64,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64), SensingError> {
    if trials < 2 {
        return Err(SensingError::InvalidParams("at least 2 trials required".into()));
    }
    let null = SparseSignal::null(n)?;
    let mut tally = Tally::new();
    for t in 0..trials {
        let mut rng = SimRng::for_trial(seed, 0, t as u64);
        let outcome = strategy.run(&null, &mut rng)?;
        tally.push(null_kl_given_actions(outcome.trace(), s_alt, amplitude));
    }
    Ok((tally.mean(), tally.std_error()))
}
