use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("beam degrees differ: {0} vs {1}")]
    DegreeMismatch(u32, u32),

    #[error("empty beam family")]
    EmptyFamily,

    #[error("exponent p = {0} outside the admissible range")]
    InvalidExponent(f64),

    #[error("matrix is not positive definite (smallest eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("power series not certified: |||B||| = {norm} >= 1")]
    SeriesNotCertified { norm: f64 },

    #[error("eigen and series inverse square roots disagree by {diff:e} (allowed {allowed:e})")]
    InverseSqrtMismatch { diff: f64, allowed: f64 },

    #[error("index {index} out of range for family of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("quadrature grid with {nodes} nodes exceeds the budget of {budget}")]
    GridTooLarge { nodes: u64, budget: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
