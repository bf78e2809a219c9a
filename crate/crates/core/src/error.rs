use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("u = {u} is outside the domain (-inf, {b})")]
    Domain { u: f64, b: f64 },
    #[error("evaluation overflowed at u = {u}")]
    NonFinite { u: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("no sign change found while bracketing {0}")]
    Bracket(String),
    #[error("{0}")]
    Range(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
