use thiserror::Error;

use crate::quantum::HilbertSpace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("space mismatch: {left} vs {right}")]
    SpaceMismatch {
        left: HilbertSpace,
        right: HilbertSpace,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("Fock truncation unsafe: {weight:.3e} of the norm sits in the top 10% of levels")]
    TruncationUnsafe { weight: f64 },

    #[error("coupling g = {g} reaches the critical value g_c = {g_c}; set the superradiant override to proceed")]
    Superradiant { g: f64, g_c: f64 },

    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("maximum number of steps ({steps}) exceeded at t = {t}")]
    MaxStepsExceeded { t: f64, steps: u64 },

    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },

    #[error("density matrix lost positivity at t = {t}: smallest eigenvalue {min_eigenvalue:.3e}")]
    PositivityViolation { t: f64, min_eigenvalue: f64 },

    #[error("moment closure blew up at t = {t}: moment magnitude {value:.3e}")]
    ClosureBlowUp { t: f64, value: f64 },

    #[error("time grids do not overlap")]
    DisjointGrids,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures raised while integrating (as opposed to bad input).
    pub fn is_integration_failure(&self) -> bool {
        matches!(
            self,
            Error::StepSizeUnderflow { .. }
                | Error::MaxStepsExceeded { .. }
                | Error::NonFinite { .. }
                | Error::PositivityViolation { .. }
                | Error::ClosureBlowUp { .. }
        )
    }
}
