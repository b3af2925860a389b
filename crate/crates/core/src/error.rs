use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the scoring engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample: {0}")]
    EmptySample(String),
    #[error("invalid count {count} for stratum {key}")]
    InvalidCount { key: String, count: i64 },
    #[error("invalid weight {weight} for stratum {key}")]
    InvalidWeight { key: String, weight: f64 },
    #[error("degenerate benchmark: {0}")]
    DegenerateBenchmark(String),
    #[error("invalid stratum key {key}: {reason}")]
    InvalidKey { key: String, reason: String },
    #[error("invalid dimension spec: {0}")]
    InvalidSpec(String),
    #[error("dimension mismatch: sample is {sample}, benchmark is {benchmark}")]
    DimensionMismatch { sample: String, benchmark: String },
    #[error("distribution for {0} carries no sample size")]
    MissingSampleSize(String),
    #[error("unknown axis {axis} in dimension {dimension}")]
    UnknownAxis { dimension: String, axis: String },
    #[error("no axes selected")]
    EmptyAxisSelection,
    #[error("invalid aligned pair: {0}")]
    InvalidPair(String),

    #[error("diversity score undefined: no benchmark stratum exceeds 1/N")]
    UndefinedDiversity,
    #[error("sample and benchmark share no stratum with positive mass")]
    NoOverlap,
    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),

    #[error("{path}: {message}")]
    SchemaError { path: String, message: String },
    #[error("{path}:{line}: duplicate stratum {key}")]
    DuplicateStratum { path: String, line: u64, key: String },
    #[error("{path}:{line}: {message}")]
    InvalidRow { path: String, line: u64, message: String },
    #[error("dimension {dimension} cannot be derived: {reason}")]
    UnderivableDimension { dimension: String, reason: String },
    #[error("registry incomplete: dimension {dimension} needs the {source_table} table")]
    RegistryIncomplete { dimension: String, source_table: String },
    #[error("unknown dimension {0}")]
    UnknownDimension(String),
    #[error("country {0} has no geographic rollup entry")]
    UnknownGeography(String),

    #[error("age {age} outside configured range starting at {min}")]
    OutOfRange { age: i64, min: i64 },
    #[error("{path}:{line}: unmappable {axis} value {value:?}")]
    UnmappableValue { path: String, line: u64, axis: String, value: String },
    #[error("invalid age bracketing: {0}")]
    InvalidBrackets(String),

    #[error("exhaustive oracle limited to K <= {max_k} and n <= {max_n}, got K = {k}, n = {n}")]
    OracleTooLarge { k: usize, n: u64, max_k: usize, max_n: u64 },
    #[error("maximum GRI estimate is zero")]
    DivisionByZero,
    #[error("invalid Monte Carlo parameters: {0}")]
    InvalidParameters(String),

    #[error("unsupported format {0}")]
    UnsupportedFormat(String),
    #[error("scorecards cover different dimensions: {0}")]
    RegistryMismatch(String),
    #[error("need at least two scorecards, got {0}")]
    TooFewScorecards(usize),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
