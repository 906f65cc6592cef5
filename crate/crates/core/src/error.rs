use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpiError {
    #[error("total degree {degree} exceeds the limit of {max}")]
    DegreeTooLarge { degree: u32, max: u32 },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("covariance matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("sample matrix is empty")]
    EmptySamples,
    #[error("point is not singular (det = {det:e})")]
    NotSingular { det: f64 },
    #[error("covariance has rank at most one; kernel is not one-dimensional")]
    RankDeficient,
    #[error("invalid exponents: {0}")]
    InvalidExponents(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, GpiError>;
