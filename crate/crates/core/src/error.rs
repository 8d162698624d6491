use thiserror::Error;

/// Everything that can go wrong across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: local dimension must be at least 2")]
    InvalidDimension(usize),

    #[error("unsupported dimension {d}: {reason}")]
    UnsupportedDimension { d: usize, reason: &'static str },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not unitary: residual {residual:.3e} exceeds tolerance {tol:.1e}")]
    NotUnitary { residual: f64, tol: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("observable invariant violated: {0}")]
    InvalidObservable(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty data: {0}")]
    EmptyData(&'static str),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("degenerate gauge: all parameters are zero")]
    DegenerateGauge,

    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("pipeline stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Tag an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
