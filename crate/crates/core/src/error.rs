use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A structural precondition on the inputs fails (ordering, range,
    /// admissibility of a parameter set as a whole).
    #[error("inadmissible input: {0}")]
    Inadmissible(String),

    /// A denominator that must stay positive vanished or went negative
    /// somewhere inside an integration range.
    #[error("nonpositive denominator for {what} at s = {s}")]
    DenominatorAt { what: String, s: f64 },

    /// An expectation of an exponential does not exist for these parameters.
    #[error("divergent expectation: {0}")]
    Divergence(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The minimizer ran out of budget; the best point seen so far rides along.
    #[error("optimizer did not converge: {reason}")]
    NonConvergence {
        reason: String,
        best: Box<crate::cs::CsOptimum>,
    },

    #[error("resource budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, Error>;
