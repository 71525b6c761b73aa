use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid ball specification: {0}")]
    InvalidSpec(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("enumeration cap exceeded: {count} items requested, cap is {cap}")]
    CapExceeded { count: u128, cap: u128 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("shape chain violation at `{path}`: {message}")]
    ShapeChain { path: String, message: String },

    #[error("input is misclassified: network predicts {predicted}, label is {label}")]
    Misclassified { predicted: usize, label: usize },

    #[error(
        "frank-wolfe did not converge after {iterations} iterations (last distance {distance})"
    )]
    NonConvergence { iterations: usize, distance: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
