use thiserror::Error;

/// Crate-wide error type. Numerical routines fail loudly instead of
/// returning NaN: every public operation validates its domain up front.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of the operation.
    #[error("domain: {0}")]
    Domain(String),
    /// Arguments are individually valid but violate a precondition
    /// (for example a subcritical formula called with supercritical beta).
    #[error("precondition: {0}")]
    Precondition(String),
    /// Result not representable in f64.
    #[error("range: {0}")]
    Range(String),
    /// Iterative scheme failed to converge within its budget.
    #[error("convergence: {0}")]
    Convergence(String),
    /// Oracle asked to run outside the regime where it is trustworthy.
    #[error("oracle refused: {0}")]
    Refused(String),
    /// Valid request for a case this release does not cover.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Empty input where at least one element is required.
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
