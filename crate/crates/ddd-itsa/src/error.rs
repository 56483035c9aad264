//! Error type shared across the crate.
//!
//! Errors are grouped into two broad families so that callers (notably the
//! command line front end) can distinguish *usage* problems — a malformed
//! specification or expression, something the caller can fix by changing
//! arguments — from *data or numeric* problems discovered while reading
//! input or running the estimator.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// File system problems (path included in the message).
    Io(String),
    /// Malformed CSV input: bad header, wrong field count, or a field that
    /// does not parse. Carries the 1-based line number when known.
    Csv { line: Option<u64>, message: String },
    /// Structural panel violations: duplicates, gaps, unbalanced units,
    /// unevenly spaced time points.
    Panel(String),
    /// An invalid analysis or simulation specification. These are usage
    /// errors: the caller asked for something incoherent.
    Spec(String),
    /// The requested design cannot be estimated (for example, rank
    /// deficiency after collinearity is introduced by the data).
    Design(String),
    /// Numeric failure inside the estimator: non-finite values, a solver
    /// that did not converge, or a failed internal sanity check.
    Numeric(String),
    /// A linear-combination expression that does not parse.
    Expr(String),
}

impl Error {
    /// Process exit code the command line front end should use for this
    /// error: 2 for usage errors, 1 for data or numeric errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Spec(_) | Error::Expr(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io(msg) => write!(f, "{msg}"),
            Error::Csv { line: Some(line), message } => {
                write!(f, "csv line {line}: {message}")
            }
            Error::Csv { line: None, message } => write!(f, "csv: {message}"),
            Error::Panel(msg) => write!(f, "panel: {msg}"),
            Error::Spec(msg) => write!(f, "specification: {msg}"),
            Error::Design(msg) => write!(f, "design: {msg}"),
            Error::Numeric(msg) => write!(f, "numeric: {msg}"),
            Error::Expr(msg) => write!(f, "expression: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
