use rand::seq::SliceRandom;

use crate::error::SensingError;
use crate::rng::SimRng;
use crate::sensing::SparseSignal;

use super::{Outcome, Strategy};

/// Uniform permutation of `0..n`, as the map `i -> perm[i]`.
pub fn random_permutation(n: usize, rng: &mut SimRng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

/// Random symmetrization of an arbitrary procedure.
///
/// A uniform permutation `π` relabels the entries before the base procedure
/// runs: the base sees entry `π(i)` where the original has entry `i`. Its
/// output is mapped back, `Ŝ^perm_i = Ŝ_{π(i)}`, and recorded actions are
/// translated to original labels. Budget accounting is untouched.
pub struct Symmetrized {
    base: Box<dyn Strategy>,
}

impl Symmetrized {
    pub fn new(base: Box<dyn Strategy>) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &dyn Strategy {
        self.base.as_ref()
    }

    /// Runs the base procedure under the fixed relabeling `perm`.
    pub fn run_with_permutation(
        &self,
        signal: &SparseSignal,
        perm: &[usize],
        rng: &mut SimRng,
    ) -> Result<Outcome, SensingError> {
        let n = signal.n();
        let mut inverse = vec![usize::MAX; n];
        for (i, &p) in perm.iter().enumerate() {
            if p >= n || inverse[p] != usize::MAX {
                return Err(SensingError::InvalidParams("not a permutation".into()));
            }
            inverse[p] = i;
        }
        let relabeled = signal.relabeled(perm)?;
        let mut out = self.base.run(&relabeled, rng)?;
        for r in &mut out.trace_mut().records {
            r.action = inverse[r.action];
        }
        if let Outcome::Estimate(e) = &mut out {
            e.estimate = e.estimate.iter().map(|&j| inverse[j]).collect();
        }
        Ok(out)
    }
}

impl Strategy for Symmetrized {
    fn id(&self) -> String {
        format!("sym:{}", self.base.id())
    }

    fn run(&self, signal: &SparseSignal, rng: &mut SimRng) -> Result<Outcome, SensingError> {
        let perm = random_permutation(signal.n(), rng);
        self.run_with_permutation(signal, &perm, rng)
    }

    fn estimates_support(&self) -> bool {
        self.base.estimates_support()
    }
}
