use thiserror::Error;

use crate::grid::Domain;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A sampling precondition failed; `condition` names the violated inequality.
    #[error("sampling violation: {condition} (have {lhs:.6e}, need {rhs:.6e})")]
    Sampling {
        condition: &'static str,
        lhs: f64,
        rhs: f64,
    },

    #[error("field is in the {found:?} domain, expected {expected:?}")]
    DomainMismatch { expected: Domain, found: Domain },

    #[error("grids differ: {0}")]
    GridMismatch(String),

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("shift overflow: {fraction:.3e} of the spectrum energy would leave the grid")]
    ShiftOverflow { fraction: f64 },

    #[error("element {index} ({label}): {source}")]
    Element {
        index: usize,
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("container format: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
