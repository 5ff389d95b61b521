use thiserror::Error;

use crate::orders::OrderCertificate;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid linear program: {0}")]
    InvalidProgram(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("order violation (margin {})", .0.margin)]
    OrderViolation(Box<OrderCertificate>),

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
