use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("patch graph has {components} connected components; run ensure_connected first")]
    Disconnected { components: usize },

    #[error(
        "noise level {target}% not reached after {iterations} probes (last measured {achieved}%)"
    )]
    NoConvergence {
        target: f64,
        achieved: f64,
        iterations: usize,
    },

    #[error("division by zero: {0}")]
    DivisionByZero(String),
}

pub type Result<T> = std::result::Result<T, Error>;
