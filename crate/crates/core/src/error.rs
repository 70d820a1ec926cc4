//! Crate-wide error type.
//!
//! Variants are grouped by how the CLI maps them to exit codes: user-facing
//! validation problems (`InvalidInput`, `Config`, `Data`, `Capacity`) exit
//! with code 2, runtime failures (`Domain`, `Io`, `Serde`) with code 1.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Vector or matrix dimensions do not match.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A combinatorial guard was exceeded (enumeration or grid too large).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A configuration document is invalid or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// A data file failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Data { line: usize, msg: String },

    /// A quantity is mathematically undefined for the given values.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for validation errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::Dimension { .. }
            | Error::Capacity(_)
            | Error::Config(_)
            | Error::Data { .. } => 2,
            Error::Domain(_) | Error::Io(_) | Error::Serde(_) => 1,
        }
    }
}
