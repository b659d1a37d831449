use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: expected {expected}, got {got}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid `{field}`: {reason}")]
    InvalidInput { field: &'static str, reason: String },

    #[error("shape leaves the unit cube on axis {axis}: [{lo}, {hi}] is not inside [0, 1]")]
    DomainViolation { axis: usize, lo: f64, hi: f64 },

    #[error("shape is not in the interior of the family domain")]
    OnDomainBoundary,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid volume moment {0}: must be positive")]
    InvalidVolume(f64),

    #[error("infeasible moments on axis {axis}: {reason}")]
    InfeasibleMoments { axis: usize, reason: String },

    #[error("reconstruction failed, best residual {best_residual:e}")]
    ReconstructionFailed { best_residual: f64 },

    #[error("no increasing linear solution: second moment deficit {deficit:e} is not positive")]
    NoIncreasingSolution { deficit: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn check_dim(field: &'static str, expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                field,
                expected,
                got,
            })
        }
    }
}
