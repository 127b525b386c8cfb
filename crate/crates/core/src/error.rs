use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An oracle returned a non-finite value.
    #[error("non-finite objective or gradient at x = {x:?}")]
    EvaluationFailure { x: Vec<f64> },

    /// The dual ascent ran out of iterations; carries the best primal point.
    #[error("subproblem did not reach the requested dual gap (best gap {gap:e})")]
    SubproblemNoConvergence { z: Vec<f64>, gap: f64 },

    #[error("unknown problem `{name}`; available: {}", available.join(", "))]
    UnknownProblem { name: String, available: Vec<String> },

    #[error("problem file: {0}")]
    ProblemFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
