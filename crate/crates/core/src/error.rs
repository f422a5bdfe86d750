use alloc::string::String;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("cutoff n_max = {n_max} too small: {reason}")]
    Cutoff { n_max: usize, reason: String },

    #[error("completeness defect {defect:.3e} exceeds {limit:.1e}")]
    Completeness { defect: f64, limit: f64 },

    #[error("probability mass defect {defect:.3e} exceeds {limit:.1e}")]
    ProbabilityMass { defect: f64, limit: f64 },

    #[error("matrix is not unitary (defect {0:.3e})")]
    NotUnitary(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("step budget of {0} exhausted")]
    StepBudget(usize),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for violations of a numerical contract (as opposed to bad input).
    pub fn is_numerical_contract(&self) -> bool {
        matches!(
            self,
            Error::Cutoff { .. }
                | Error::Completeness { .. }
                | Error::ProbabilityMass { .. }
                | Error::NotUnitary(_)
                | Error::StepBudget(_)
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
