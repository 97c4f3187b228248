//! Error taxonomy shared by all modules.
//!
//! Three failure classes cover everything the solvers can report:
//! configuration problems (bad grids, invalid parameters, mismatched sizes),
//! numeric failures (non-finite values, domain degeneracy such as pinch-off,
//! solver breakdown), and non-convergence of a fixed-point iteration that is
//! allowed to fail (reported, not fatal, at the CLI level).

use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Failure classes; the CLI maps these onto distinct exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid configuration or incompatible inputs.
    Config(String),
    /// Numeric failure: non-finite value, degenerate domain, solver breakdown.
    Numeric(String),
    /// An iteration that is permitted to fail did not converge.
    NonConvergence(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Numeric(msg) => write!(f, "numeric error: {msg}"),
            Error::NonConvergence(msg) => write!(f, "did not converge: {msg}"),
        }
    }
}

impl Error {
    /// Build a configuration error from anything displayable.
    pub fn config(msg: impl fmt::Display) -> Self {
        Error::Config(alloc::format!("{msg}"))
    }

    /// Build a numeric error from anything displayable.
    pub fn numeric(msg: impl fmt::Display) -> Self {
        Error::Numeric(alloc::format!("{msg}"))
    }

    /// Build a non-convergence report from anything displayable.
    pub fn non_convergence(msg: impl fmt::Display) -> Self {
        Error::NonConvergence(alloc::format!("{msg}"))
    }
}
