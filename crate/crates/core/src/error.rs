use thiserror::Error;

use crate::netlist::Diagnostic;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("line {line}: net `{net}` is used but never defined")]
    UndefinedNet { line: usize, net: String },

    #[error("line {line}: net `{net}` is defined more than once")]
    DuplicateDefinition { line: usize, net: String },

    #[error("invalid netlist: {}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),

    #[error("{0}")]
    Unsupported(String),

    #[error("missing value for primary input `{0}`")]
    MissingAssignment(String),

    #[error("interface mismatch: {0}")]
    InterfaceMismatch(String),

    #[error("length mismatch: expected {expected}, got {actual} ({what})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("frozen net `{0}` was eliminated during optimization")]
    FrozenNetLost(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
