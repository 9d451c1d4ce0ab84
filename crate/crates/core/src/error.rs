//! Error type shared across the library.

use alloc::string::String;
use core::fmt;

use crate::lp::LpStatus;

/// Library-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors surfaced by estimators, solvers and generators.
///
/// Solver outcomes that are legitimate answers (infeasible, unbounded,
/// iteration limit) are reported through [`LpStatus`], not through this
/// type; `Estimation` wraps them only when a fit *requires* an optimal
/// solution and did not get one.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Dimension mismatch or structurally invalid input.
    Shape(String),
    /// Parameter outside its admissible domain.
    Domain(String),
    /// Numerical failure (factorization breakdown, singular basis, ...).
    Numerical(String),
    /// Input that is formally valid but degenerate for the requested
    /// operation, e.g. a zero pseudo-response or a zero design column.
    DegenerateInput(String),
    /// An estimator needed an optimal program solution and the solver
    /// returned something else. `column` identifies the offending
    /// response column for multi-column fits.
    Estimation {
        status: LpStatus,
        context: String,
        column: Option<usize>,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(msg) => write!(f, "shape error: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical error: {msg}"),
            Error::DegenerateInput(msg) => write!(f, "degenerate input: {msg}"),
            Error::Estimation {
                status,
                context,
                column,
            } => match column {
                Some(j) => write!(f, "estimation failed ({context}, column {j}): {status:?}"),
                None => write!(f, "estimation failed ({context}): {status:?}"),
            },
        }
    }
}

impl core::error::Error for Error {}
