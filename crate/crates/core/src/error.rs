use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fields live on different domains")]
    DomainMismatch,

    #[error("kernel is not symmetric: K(x,y)={forward:e} but K(y,x)={backward:e}")]
    NonSymmetricKernel { forward: f64, backward: f64 },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is singular at pivot {0}")]
    Singular(usize),

    #[error("inverse power iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    EigenNotConverged { iterations: usize, residual: f64 },

    #[error("negative value {value:e} at node {node}")]
    NegativeValue { node: usize, value: f64 },

    #[error("newton iteration failed at t={time:e} after {iterations} iterations (residual {residual:e})")]
    NewtonFailed {
        time: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("theory hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("too few usable points: {found} (need {needed})")]
    TooFewPoints { found: usize, needed: usize },

    #[error("suite {suite} failed: {source}")]
    SuiteFailed { suite: String, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;
