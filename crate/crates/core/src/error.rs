use thiserror::Error;

use crate::bernstein::PositiveIncreaseReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    InvalidSpec(String),

    #[error("quadrature did not converge: {what} (estimate {estimate:e}, error {error:e})")]
    NonconvergentQuadrature {
        what: &'static str,
        estimate: f64,
        error: f64,
    },

    #[error("root finder did not converge after {iterations} iterations")]
    NonconvergentRootFind { iterations: usize },

    #[error("contour truncation could not be certified up to |Im z| = {cap}")]
    TruncationUnbounded { cap: f64 },

    #[error("positive-increase diagnostic inconclusive: criterion within {margin} of 1")]
    InconclusiveDiagnostic {
        margin: f64,
        report: Box<PositiveIncreaseReport>,
    },

    #[error("positive increase not verified for this model")]
    PositiveIncreaseUnverified,

    #[error("simulation budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonconvergentQuadrature { .. }
                | Error::NonconvergentRootFind { .. }
                | Error::TruncationUnbounded { .. }
                | Error::BudgetExceeded(_)
        )
    }
}
