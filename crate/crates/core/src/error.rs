use thiserror::Error;

/// Error type shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation was handed values that violate its contract.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A site or mode index fell outside the space it refers to.
    #[error("index out of range: {0}")]
    Index(String),
    /// Two operands live on different spaces or have incompatible shapes.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A numeric guard tripped (non-finite entries, degenerate input).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// The requested point lies outside the domain of a closed form.
    #[error("domain error: {0}")]
    Domain(String),
    /// A full-matrix path was asked for a space larger than the configured ceiling.
    #[error("state dimension {dimension} exceeds the ceiling {ceiling}")]
    DimensionCeiling { dimension: usize, ceiling: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
