use thiserror::Error;

/// Errors raised by the spectral, norm, state and Kubo routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("{function} is undefined at eigenvalue {eigenvalue}")]
    Domain { function: String, eigenvalue: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The perturbation lies outside the hood of the reference state.
    #[error("in_hood failed: perturbation outside hood (margin {margin:.3e})")]
    OutOfHood { margin: f64 },

    #[error("beta overflow: beta0 = {beta0}, relative bound a = {a} (need a < 1 - beta0)")]
    BetaOverflow { beta0: f64, a: f64 },

    #[error("resource limit: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;
