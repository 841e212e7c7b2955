use thiserror::Error;

/// Errors surfaced by the numerical layers of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter {name} = {value} outside supported range {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("index {index} out of truncation range {limit}")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
