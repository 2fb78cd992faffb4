use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degree {degree} exceeds the supported cap {cap}")]
    DegreeCap { degree: usize, cap: usize },

    #[error("coefficient budget exceeded: {needed} coefficients, budget {budget}")]
    BudgetExceeded { needed: usize, budget: usize },

    #[error("vectors are linearly dependent (vector {index}, residual {residual:e})")]
    LinearlyDependent { index: usize, residual: f64 },

    #[error("basis is not orthonormal (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("parse error at line {line}, field {field}: {message}")]
    Parse { line: usize, field: usize, message: String },

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("fit refused: {0}")]
    FitRefused(String),

    #[error("subspace Y is not contained in the edge hyperplane (edge {edge}, overlap {overlap:e})")]
    ZoomMisaligned { edge: usize, overlap: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
