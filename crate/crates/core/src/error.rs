use thiserror::Error;

/// Errors raised across the crate.
///
/// The variants are grouped so front ends can map them onto a small set of
/// exit codes: input/domain problems, shape problems, and resource caps.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("row does not sum to 1 (sum = {sum}) in {context}")]
    NotNormalized { context: String, sum: f64 },

    #[error("negative or non-finite probability {value} in {context}")]
    InvalidProbability { context: String, value: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("axis groups overlap on `{0}`")]
    OverlappingGroups(String),

    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    #[error("{what} needs {cells} cells, cap is {cap}")]
    Capacity {
        what: String,
        cells: u128,
        cap: u128,
    },

    #[error("degenerate posterior: {0}")]
    DegeneratePosterior(String),

    #[error("likelihood encoder degenerate: {0}")]
    EncoderDegenerate(String),

    #[error("internal consistency: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Coarse classification used by the command-line front end.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_)
            | Error::Parse(_)
            | Error::NotNormalized { .. }
            | Error::InvalidProbability { .. }
            | Error::DegeneratePosterior(_)
            | Error::EncoderDegenerate(_)
            | Error::Inconsistent(_) => ErrorKind::Input,
            Error::Shape(_)
            | Error::UnknownAxis(_)
            | Error::OverlappingGroups(_)
            | Error::LabelMismatch(_) => ErrorKind::Shape,
            Error::Capacity { .. } => ErrorKind::Capacity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Shape,
    Capacity,
}
