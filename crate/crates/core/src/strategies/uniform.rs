use std::collections::BTreeSet;

use crate::error::SensingError;
use crate::rng::SimRng;
use crate::sensing::{SensingSession, SparseSignal};

use super::{EstimateOutcome, Outcome, Strategy};

/// Non-adaptive baseline: every entry measured once at precision `m/n`, then
/// `Ŝ = {i : y_i ≥ τ}`.
pub fn non_adaptive_uniform_estimate(
    signal: &SparseSignal,
    m: f64,
    tau: f64,
    rng: &mut SimRng,
) -> Result<EstimateOutcome, SensingError> {
    let n = signal.n();
    let mut session = SensingSession::hard(signal, m, rng)?;
    let precision = m / n as f64;
    let mut estimate = BTreeSet::new();
    for i in 0..n {
        if session.observe(i, precision, rng)? >= tau {
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
pub struct UniformStrategy {
    budget: f64,
    tau: f64,
}

impl UniformStrategy {
    pub fn new(budget: f64, tau: f64) -> Result<Self, SensingError> {
        if !(budget > 0.0) || tau.is_nan() {
            return Err(SensingError::InvalidParams(format!(
                "uniform: budget {budget}, threshold {tau}"
            )));
        }
        Ok(Self { budget, tau })
    }

    /// `√(2 ln n)` noise standard deviations, the noise level being `√(n/m)`.
    pub fn default_threshold(n: usize, m: f64) -> f64 {
        (2.0 * (n as f64).ln() * n as f64 / m).sqrt()
    }

    pub fn threshold(&self) -> f64 {
        self.tau
    }
}

impl Strategy for UniformStrategy {
    fn id(&self) -> String {
        "uniform".into()
    }

    fn run(&self, signal: &SparseSignal, rng: &mut SimRng) -> Result<Outcome, SensingError> {
        non_adaptive_uniform_estimate(signal, self.budget, self.tau, rng).map(Outcome::Estimate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn spends_exactly_m() {
        let x = SparseSignal::new(10, [1], 3.0).unwrap();
        let mut rng = SimRng::from_seed(1);
        let out = non_adaptive_uniform_estimate(&x, 7.0, 1.0, &mut rng).unwrap();
        assert_eq!(out.trace.len(), 10);
        assert!((out.trace.ledger.spent() - 7.0).abs() < 1e-12);
        assert!(out.trace.records.iter().all(|r| (r.precision - 0.7).abs() < 1e-15));
    }

    #[test]
    fn large_amplitude_recovers_support() {
        let n = 1000;
        let tau = (2.0 * (n as f64).ln()).sqrt();
        let support = [3, 77, 150, 400, 401, 402, 700, 800, 901, 999];
        let x = SparseSignal::new(n, support, 100.0).unwrap();
        let trials = 2000;
        let exact = (0..trials)
            .filter(|&t| {
                let mut rng = SimRng::for_trial(11, 0, t);
                let out = non_adaptive_uniform_estimate(&x, n as f64, tau, &mut rng).unwrap();
                out.estimate == x.support_set()
            })
            .count() as f64
            / trials as f64;
        // union bound on a false positive: (n - s) Φc(τ); misses are negligible at μ = 100
        let std = Normal::standard();
        let fp = (n - support.len()) as f64 * (1.0 - std.cdf(tau));
        let se = (fp * (1.0 - fp) / trials as f64).sqrt();
        assert!(exact >= 1.0 - fp - 3.0 * se, "exact {exact}, bound {}", 1.0 - fp);
    }

    #[test]
    fn infinite_threshold_selects_nothing() {
        let x = SparseSignal::null(50).unwrap();
        for t in 0..20 {
            let mut rng = SimRng::for_trial(2, 0, t);
            let out = non_adaptive_uniform_estimate(&x, 50.0, f64::INFINITY, &mut rng).unwrap();
            assert!(out.estimate.is_empty());
        }
    }

    #[test]
    fn zero_threshold_is_a_fair_coin_under_the_null() {
        let x = SparseSignal::null(1).unwrap();
        let trials = 10_000;
        let hits = (0..trials)
            .filter(|&t| {
                let mut rng = SimRng::for_trial(3, 0, t);
                !non_adaptive_uniform_estimate(&x, 1.0, 0.0, &mut rng)
                    .unwrap()
                    .estimate
                    .is_empty()
            })
            .count() as f64
            / trials as f64;
        assert!((hits - 0.5).abs() <= 3.0 * (0.25 / trials as f64).sqrt(), "{hits}");
    }
}
