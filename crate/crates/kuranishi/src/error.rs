use thiserror::Error;

/// Errors surfaced by chart construction, validation, and counting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch at {context}: expected {expected}, got {got}")]
    Dimension {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid input at {path}: {message}")]
    Invalid { path: String, message: String },

    #[error("footprint point '{label}' has section residual {residual:.3e} (max {max:.1e})")]
    FootprintResidual {
        label: String,
        residual: f64,
        max: f64,
    },

    #[error("footprint point '{label}' lies outside the chart domain")]
    FootprintOutsideDomain { label: String },

    #[error("compactness margin violated: zero at {point:?} is within {margin} of the domain boundary")]
    MarginViolation { point: Vec<f64>, margin: f64 },

    #[error("degenerate zeros persisted through {attempts} perturbation attempts")]
    DegenerateCount { attempts: usize },

    #[error("unsupported regime: {0}")]
    Unsupported(String),

    #[error("singular matrix in {0}")]
    Singular(String),

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn dim(context: impl Into<String>, expected: usize, got: usize) -> Self {
        Error::Dimension {
            context: context.into(),
            expected,
            got,
        }
    }
}
