use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// The LP relaxation has no feasible point. When available, `certificate`
    /// is a `u >= 0` with `u^T b < min_{x in box} u^T A x`.
    #[error("LP is infeasible")]
    Infeasible { certificate: Option<Vec<f64>> },

    #[error("simplex iteration limit of {0} pivots reached")]
    IterationLimit(usize),

    #[error("singular basis matrix")]
    SingularBasis,

    #[error("randomized rounding missed bound {bound} after {tries} tries (best {best})")]
    RoundingBoundNotMet { bound: f64, best: f64, tries: usize },

    #[error("filtered pool has {available} columns, need at least {required}")]
    PoolTooSmall { available: usize, required: usize },

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }
}
