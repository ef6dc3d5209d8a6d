use thiserror::Error;

use crate::engine::ModelClass;

#[derive(Debug, Error)]
pub enum RuinError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("infinite mean: {0}")]
    InfiniteMean(String),

    #[error("invalid joint matrix: {0}")]
    InvalidMatrix(String),

    /// Working precision is too narrow for the requested computation.
    #[error("numeric precision exhausted: {0}; rerun with a wider mantissa (precision_bits)")]
    Precision(String),

    #[error("degenerate ratio: a_{horizon} equals a_{next}; use a larger horizon N", next = .horizon + 1)]
    DegenerateRatio { horizon: usize },

    #[error("procedure requires model class {expected}, got {found}")]
    WrongClass {
        expected: &'static str,
        found: ModelClass,
    },

    /// A state that the case analysis rules out was reached; signals a truncation or
    /// classification bug rather than bad input.
    #[error("internal contradiction: {0}")]
    Contradiction(String),

    #[error(
        "joint matrix is exact only through index {available}, but index {required} is needed"
    )]
    WindowTooSmall { required: usize, available: usize },
}

impl RuinError {
    /// True for failures that a wider mantissa or longer horizon may cure.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            RuinError::Precision(_)
                | RuinError::DegenerateRatio { .. }
                | RuinError::Contradiction(_)
                | RuinError::WindowTooSmall { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, RuinError>;
