use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("contract: axis pair ({axis_a}, {axis_b}) has mismatched dimensions {dim_a} vs {dim_b}")]
    ContractMismatch {
        axis_a: usize,
        axis_b: usize,
        dim_a: usize,
        dim_b: usize,
    },

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("bitstring length {got} does not match system size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("system size mismatch: {0} sites vs {1} sites")]
    SizeMismatch(usize, usize),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("invalid cut {cut} for a chain of {n} sites (expected 1..={max})", max = .n - 1)]
    InvalidCut { cut: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{n} sites exceeds the full-space limit of {limit}; use the MPO path")]
    TooLarge { n: usize, limit: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("checkpoint format: {0}")]
    Format(String),

    #[error("validation: {0}")]
    Validation(String),

    #[error("configuration {config} has zero probability in the {basis} basis")]
    ZeroProbability { basis: String, config: String },

    #[error("non-finite loss at epoch {epoch}, step {step}: {detail}")]
    NonFiniteLoss {
        epoch: usize,
        step: usize,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
