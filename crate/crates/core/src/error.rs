use thiserror::Error;

/// Errors raised by the sensing engine, the strategies and the oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensingError {
    #[error("budget exceeded: spent {spent} + requested {requested} > total {total}")]
    BudgetExceeded {
        spent: f64,
        requested: f64,
        total: f64,
    },
    #[error("action {action} outside 1..={n}")]
    InvalidAction { action: usize, n: usize },
    #[error("precision must be positive and finite, got {0}")]
    InvalidPrecision(f64),
    #[error("invalid dimension n = {n}: {reason}")]
    InvalidDimension { n: usize, reason: &'static str },
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("invalid support class: {0}")]
    InvalidClass(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("class too large for the oracle: {0}")]
    ClassTooLarge(String),
    #[error("value {x} outside the support of the distribution")]
    OutOfSupport { x: usize },
    #[error("class is not symmetric")]
    AsymmetricClass,
    #[error("unknown strategy id `{0}`")]
    UnknownStrategy(String),
}
