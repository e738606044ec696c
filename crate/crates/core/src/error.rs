use thiserror::Error;

/// Errors raised by the numerical kernels and the experiment drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("iteration limit of {limit} reached (residual {residual:e})")]
    IterationLimit { limit: usize, residual: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("classification input missing: {0}")]
    ClassificationInput(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("interaction energy diverges: {0}")]
    Divergent(String),

    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
