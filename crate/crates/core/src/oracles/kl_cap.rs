use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SensingError;
use crate::metrics::support_grid;
use crate::rng::SimRng;
use crate::sensing::{null_kl_given_actions, SparseSignal, SupportClass};
use crate::strategies::Strategy;
use crate::tally::Tally;

pub const DEFAULT_KL_SUPPORTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlCapReport {
    pub strategy: String,
    /// Smallest per-support mean of the null log-likelihood ratio.
    pub min_empirical_kl: f64,
    /// Standard error of the minimizing support's mean.
    pub min_se: f64,
    pub max_se: f64,
    /// `μ² m s / (2|Ξ|)`.
    pub cap: f64,
    pub supports: usize,
    pub trials: usize,
    pub pass: bool,
}

/// Checks that some support of `class` has expected null log-likelihood
/// ratio at most `μ² m s / (2|Ξ|)`, up to three standard errors.
///
/// All supports are scored on the same null runs. Sampling supports can only
/// raise the observed minimum, so a pass on the sample implies a pass on the
/// full class.
pub fn kl_cap_check(
    strategy: &dyn Strategy,
    class: &SupportClass,
    amplitude: f64,
    m: f64,
    trials: usize,
    supports: usize,
    seed: u64,
) -> Result<KlCapReport, SensingError> {
    if !class.is_symmetric() {
        return Err(SensingError::AsymmetricClass);
    }
    if trials < 2 {
        return Err(SensingError::InvalidParams("at least 2 trials required".into()));
    }
    let grid: Vec<BTreeSet<usize>> = support_grid(class, supports, seed)
        .into_iter()
        .map(|s| s.into_iter().collect())
        .collect();
    let null = SparseSignal::null(class.n())?;
    let k = grid.len();
    let tallies = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = SimRng::for_trial(seed, 0, t as u64);
            let out = strategy.run(&null, &mut rng)?;
            Ok(grid
                .iter()
                .map(|s| Tally::from_iter([null_kl_given_actions(out.trace(), s, amplitude)]))
                .collect::<Vec<_>>())
        })
        .try_reduce(
            || vec![Tally::new(); k],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    x.merge(y);
                }
                Ok(a)
            },
        )?;
    let min_tally = tallies
        .iter()
        .min_by(|a, b| a.mean().total_cmp(&b.mean()))
        .expect("non-empty grid");
    let max_se = tallies.iter().map(|t| t.std_error()).fold(0.0, f64::max);
    let cap = amplitude * amplitude * m * class.cardinality() as f64 / (2.0 * class.xi_size() as f64);
    let min_empirical_kl = min_tally.mean();
    Ok(KlCapReport {
        strategy: strategy.id(),
        min_empirical_kl,
        min_se: min_tally.std_error(),
        max_se,
        cap,
        supports: k,
        trials,
        pass: min_empirical_kl <= cap * (1.0 + 1e-9) + 3.0 * max_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensing::SensingSession;
    use crate::strategies::{EstimateOutcome, Outcome, SdsParams, SdsStrategy, UniformStrategy};

    struct AllOnFirst(f64);

    impl Strategy for AllOnFirst {
        fn id(&self) -> String {
            "first".into()
        }
        fn run(&self, signal: &SparseSignal, rng: &mut SimRng) -> Result<Outcome, SensingError> {
            let mut session = SensingSession::hard(signal, self.0, rng)?;
            session.observe(0, self.0, rng)?;
            Ok(Outcome::Estimate(EstimateOutcome {
                estimate: BTreeSet::new(),
                trace: session.into_trace(),
                truncated: false,
            }))
        }
    }

    #[test]
    fn uniform_saturates_the_cap() {
        let class = SupportClass::all_subsets(64, 4).unwrap();
        let st = UniformStrategy::new(64.0, 1.0).unwrap();
        let r = kl_cap_check(&st, &class, 1.3, 64.0, 5, 20, 0).unwrap();
        assert!((r.min_empirical_kl - r.cap).abs() < 1e-8);
        assert_eq!(r.max_se, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn concentrated_strategy_passes_with_slack() {
        let class = SupportClass::enumerate_all_subsets(6, 2).unwrap();
        let r = kl_cap_check(&AllOnFirst(6.0), &class, 1.0, 6.0, 3, 0, 0).unwrap();
        assert_eq!(r.min_empirical_kl, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn sds_passes() {
        let class = SupportClass::all_subsets(64, 4).unwrap();
        let st = SdsStrategy::new(64.0, SdsParams::defaults(64, 64.0).unwrap()).unwrap();
        let r = kl_cap_check(&st, &class, 1.0, 64.0, 2000, 100, 5).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn asymmetric_class_is_rejected() {
        let class = SupportClass::explicit(3, vec![vec![0, 1], vec![0, 2]]).unwrap();
        let st = UniformStrategy::new(3.0, 1.0).unwrap();
        assert_eq!(
            kl_cap_check(&st, &class, 1.0, 3.0, 5, 0, 0),
            Err(SensingError::AsymmetricClass)
        );
    }
}
