//! Simulation and verification toolkit for budgeted adaptive sensing of
//! sparse signals observed in Gaussian noise.
//!
//! Every measurement picks one coordinate `a` of an unknown vector `x` and a
//! precision `γ²`, and returns `x_a + γ^{-1} W` with `W` standard normal. The
//! total precision spent by a procedure is capped by a budget `m`.
//!
//! The crate is organised as:
//!
//! * [`sensing`]: signals, support classes, the budget ledger, traces and
//!   exact likelihood ratios.
//! * [`strategies`]: the sensing and inference procedures (uniform
//!   thresholding, simple distilled sensing, distilled sensing, subsampled
//!   detection, parallel SPRT, symmetrization).
//! * [`metrics`]: error metrics and Monte Carlo risk estimators.
//! * [`bounds`]: closed-form amplitude bounds.
//! * [`oracles`]: brute-force verifiers (max-min allocation LP, pmfs, KL cap).
//! * [`harness`]: deterministic parallel experiment runner.
//! * [`cli`]: the `adasense` command-line front end.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod oracles;
pub mod rng;
pub mod sensing;
pub mod strategies;
pub mod tally;

pub use error::SensingError;
pub use rng::SimRng;
pub use sensing::{
    BudgetLedger, BudgetMode, SensingRecord, SensingSession, SensingTrace, SparseSignal,
    SupportClass,
};
pub use strategies::{DetectOutcome, EstimateOutcome, Outcome, Strategy};
