use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {op} got {left} and {right}")]
    Shape {
        op: &'static str,
        left: String,
        right: String,
    },

    #[error("invalid norm exponent p = {0} (need p >= 1)")]
    InvalidNorm(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("activation overflow at time step {step} (layer {layer})")]
    Overflow { step: usize, layer: usize },

    #[error("training aborted in epoch {epoch}: {source}")]
    StepAborted {
        epoch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("missing data file {}", .0.display())]
    MissingFile(PathBuf),

    #[error("malformed data in {}: {reason}", .path.display())]
    Corrupt { path: PathBuf, reason: String },

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, left: impl ToString, right: impl ToString) -> Self {
        Error::Shape {
            op,
            left: left.to_string(),
            right: right.to_string(),
        }
    }

    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    /// True for failures caused by numerics (overflow, NaN) rather than input data or config.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NonFinite { .. } | Error::Overflow { .. } => true,
            Error::StepAborted { source, .. } => source.is_numeric(),
            _ => false,
        }
    }

    /// True for failures caused by missing or malformed dataset files.
    pub fn is_data(&self) -> bool {
        matches!(
            self,
            Error::MissingFile(_) | Error::Corrupt { .. } | Error::Io(_)
        )
    }
}
