use thiserror::Error;

/// Errors raised while evaluating jets, functions and operators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("incompatible jets: {0}")]
    IncompatibleJets(String),

    #[error("index {index} out of range for dimension {dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },

    #[error("derivative order exhausted: need order {needed}, have {available}")]
    OrderExhausted { needed: usize, available: usize },

    #[error("{function} is not defined at {value}")]
    Domain { function: &'static str, value: f64 },

    #[error("{function} is not smooth at {value}")]
    NonSmooth { function: &'static str, value: f64 },

    #[error("non-finite value at {point:?}")]
    NonFinite { point: Vec<f64> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("check `{check}` requires a {required} geometry")]
    WrongGeometry { check: &'static str, required: &'static str },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
