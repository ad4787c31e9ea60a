//! Independent brute-force verifiers.
//!
//! These computations share no code with the strategies they check: the
//! max-min allocation is solved by a self-contained simplex, the pmfs are
//! evaluated from their closed forms, and the symmetrization identity is
//! averaged by enumeration.

mod kl_cap;
mod lp;
mod pmf;
mod symmetry;

pub use kl_cap::{kl_cap_check, KlCapReport, DEFAULT_KL_SUPPORTS};
pub use lp::{
    allocation_min_value, average_allocation_value, maxmin_allocation_value, BudgetAllocation,
    MAX_ORACLE_CLASS, MAX_ORACLE_DIMENSION,
};
pub use pmf::{
    hypergeometric_mean, hypergeometric_pmf, hypergeometric_variance, truncated_geometric_pmf,
};
pub use symmetry::{symmetrized_false_alarm, symmetrized_miss};
