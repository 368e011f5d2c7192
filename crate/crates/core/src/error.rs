use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("precision exhausted in {op}: {detail}")]
    PrecisionLoss { op: &'static str, detail: String },

    #[error("not a unit: {0}")]
    NotUnit(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("unsupported basis: {0}")]
    UnsupportedBasis(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("hypotheses not certified: {0}")]
    Hypotheses(String),

    #[error("no convergence after {rounds} rounds: {detail}")]
    NoConvergence { rounds: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
