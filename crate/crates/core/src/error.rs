use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unknown schema version `{found}` (expected `{expected}`)")]
    UnknownSchema { found: String, expected: &'static str },

    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("calibration degenerate at frequency index {index}: |S_calib| = {magnitude:e} below floor {floor:e}")]
    CalibrationDegenerate {
        index: usize,
        magnitude: f64,
        floor: f64,
    },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("degenerate ToA normaliser: maximum ToA is zero but ToAs differ")]
    DegenerateNormalizer,

    #[error("no signal: {0}")]
    NoSignal(String),

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Malformed(_)
            | Error::DimensionMismatch(_)
            | Error::NonFinite(_)
            | Error::UnknownSchema { .. }
            | Error::Read { .. } => 2,
            Error::CalibrationDegenerate { .. } => 3,
            Error::NoSignal(_) => 4,
            Error::RankDeficient(_) => 5,
            _ => 1,
        }
    }

    /// Short machine-readable name used in structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid_config",
            Error::Malformed(_) => "malformed",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::UnknownSchema { .. } => "unknown_schema",
            Error::Read { .. } => "read",
            Error::CalibrationDegenerate { .. } => "calibration_degenerate",
            Error::IndexOutOfRange(_) => "index_out_of_range",
            Error::DegenerateNormalizer => "degenerate_normalizer",
            Error::NoSignal(_) => "no_signal",
            Error::RankDeficient(_) => "rank_deficient",
            Error::InsufficientData(_) => "insufficient_data",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Io(_) => "io",
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}
