//! Crate-wide error type.

use chrono::NaiveDate;
use thiserror::Error;

/// Coarse classification used by callers (the CLI maps these to exit codes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed input data or invalid parameters.
    Input,
    /// A numeric quantity left its valid domain (negative variance, zero sigma, ...).
    Numeric,
    /// An engine was asked to run without the history or series it needs.
    Precondition,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("csv read failed: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("missing column `{0}` in header")]
    MissingColumn(String),

    #[error("row {row}: unparseable date `{value}`")]
    BadDate { row: usize, value: String },

    #[error("row {row}: unparseable level `{value}`")]
    BadNumber { row: usize, value: String },

    #[error("row {row}: non-positive level {value}")]
    NonPositiveLevel { row: usize, value: f64 },

    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),

    #[error("series `{label}` too short: has {len}, needs at least {min}")]
    SeriesTooShort {
        label: String,
        len: usize,
        min: usize,
    },

    #[error("return horizon {n} must satisfy 1 <= n < series length {len}")]
    BadHorizon { n: usize, len: usize },

    #[error("date interval ends before it starts: {start} > {end}")]
    NegativeInterval { start: NaiveDate, end: NaiveDate },

    #[error("empty input")]
    EmptyInput,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("decay factor {0} outside (0, 1)")]
    BadDecay(f64),

    #[error("invalid parameter: {0}")]
    BadParameter(String),

    #[error("negative variance {0}")]
    NegativeVariance(f64),

    #[error("zero standard deviation")]
    ZeroSigma,

    #[error("return at or below -100%: {0}")]
    ReturnBelowFloor(f64),

    #[error("insufficient data: have {have}, need {need} ({what})")]
    InsufficientData {
        what: String,
        have: usize,
        need: usize,
    },

    #[error("no rate available for {0}")]
    MissingRate(NaiveDate),

    #[error("series dates misaligned at position {position}")]
    DateMisalignment { position: usize },

    #[error("covariance matrix dimension {dim} does not match {n} weights")]
    DimensionMismatch { dim: usize, n: usize },

    #[error("covariance matrix not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },

    #[error("quadratic form is negative ({0}) beyond tolerance")]
    IndefiniteForm(f64),

    #[error("degenerate covariance: contract {0} has zero volatility")]
    DegenerateCovariance(usize),
}

impl Error {
    /// Which coarse class this error falls into.
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Csv(_) | Io { .. } | MissingColumn(_) | BadDate { .. } | BadNumber { .. }
            | NonPositiveLevel { .. } | DuplicateDate(_) | BadHorizon { .. }
            | NegativeInterval { .. } | EmptyInput | LengthMismatch { .. } | BadDecay(_)
            | BadParameter(_) => ErrorClass::Input,
            NegativeVariance(_) | ZeroSigma | ReturnBelowFloor(_) | IndefiniteForm(_)
            | DegenerateCovariance(_) | NotSymmetric { .. } | DimensionMismatch { .. } => {
                ErrorClass::Numeric
            }
            SeriesTooShort { .. } | InsufficientData { .. } | MissingRate(_)
            | DateMisalignment { .. } => ErrorClass::Precondition,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
