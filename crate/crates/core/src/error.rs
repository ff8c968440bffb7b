use thiserror::Error;

use crate::geometry::UnitVector3;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two points are antipodal where a logarithm or cost derivative is needed.
    #[error("antipodal singularity between {from:?} and {to:?}")]
    Antipodal { from: [f64; 3], to: [f64; 3] },

    /// Every tangent-average term was dropped as antipodal to the query point.
    #[error("all transport weight sits on antipodes of {query:?}")]
    DegenerateAverage { query: [f64; 3] },

    #[error("non-finite gradient at iteration {iteration}")]
    NonFiniteGradient { iteration: usize },

    #[error("no convergence after {sweeps} sweeps (residual {residual:e})")]
    NonConvergence { sweeps: usize, residual: f64 },

    #[error("band limit mismatch: expected {expected}, found {found}")]
    BandLimitMismatch { expected: usize, found: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn antipodal(from: &UnitVector3, to: &UnitVector3) -> Self {
        Error::Antipodal {
            from: from.to_array(),
            to: to.to_array(),
        }
    }

    /// True for failures of the numerical kind (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Antipodal { .. }
                | Error::DegenerateAverage { .. }
                | Error::NonFiniteGradient { .. }
                | Error::NonConvergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
