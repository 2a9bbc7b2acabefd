//! Crate-wide error type.
//!
//! Errors are grouped by how a caller should react: `Config` means the
//! input description is wrong and must be fixed by the user, `Guard` means
//! a parameter combination falls outside the regime the theory covers,
//! `Protocol` means the ask/tell contract was violated by the caller,
//! `Internal` means an invariant the library maintains was broken, and
//! `InsufficientData` means an estimator had too little signal to answer.

use std::fmt;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug)]
pub enum Error {
    /// Invalid configuration; `path` names the offending field or quantity.
    Config { path: String, message: String },
    /// Parameter combination rejected by a theoretical validity guard.
    Guard { message: String },
    /// Ask/tell protocol misuse (step without observe or vice versa).
    Protocol { message: String },
    /// Internal consistency failure; indicates a bug, not bad input.
    Internal { message: String },
    /// An estimator could not produce an answer from the data it saw.
    InsufficientData { message: String },
    /// Filesystem or serialization failure while writing artifacts.
    Io(std::io::Error),
}

impl Error {
    /// A configuration error; `path` names the offending field.
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { path: path.into(), message: message.into() }
    }

    /// A validity-guard rejection.
    pub fn guard(message: impl Into<String>) -> Self {
        Error::Guard { message: message.into() }
    }

    /// An ask/tell protocol violation.
    pub fn protocol(message: impl Into<String>) -> Self {
        Error::Protocol { message: message.into() }
    }

    /// A broken internal invariant.
    pub fn internal(message: impl Into<String>) -> Self {
        Error::Internal { message: message.into() }
    }

    /// An estimator with too little signal to answer.
    pub fn insufficient(message: impl Into<String>) -> Self {
        Error::InsufficientData { message: message.into() }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config { path, message } => write!(f, "config error at {path}: {message}"),
            Error::Guard { message } => write!(f, "guard violation: {message}"),
            Error::Protocol { message } => write!(f, "protocol error: {message}"),
            Error::Internal { message } => write!(f, "internal error: {message}"),
            Error::InsufficientData { message } => write!(f, "insufficient data: {message}"),
            Error::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}
