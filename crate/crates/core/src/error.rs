use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FptError {
    /// An argument lies outside the domain of the requested function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The result is not representable in double precision.
    #[error("result out of range: {0}")]
    OutOfRange(String),

    /// An iterative method or quadrature did not reach its tolerance.
    #[error("{what} did not converge (achieved {achieved:.3e}, requested {requested:.3e})")]
    NonConvergence {
        what: &'static str,
        achieved: f64,
        requested: f64,
    },

    /// Two orders of the Gaver-Stehfest sum disagree beyond the tolerance.
    #[error("Gaver-Stehfest instability: orders {terms} and {} differ by {discrepancy:.3e} (tolerance {tolerance:.3e})", terms - 2)]
    Instability {
        terms: usize,
        discrepancy: f64,
        tolerance: f64,
    },

    /// A forced evaluator was asked for a query it does not cover.
    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl FptError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        FptError::Domain(msg.into())
    }

    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            FptError::NonConvergence { .. }
                | FptError::Instability { .. }
                | FptError::OutOfRange(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, FptError>;
