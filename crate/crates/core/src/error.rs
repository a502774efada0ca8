use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input at row {row}, column {col}: {reason}")]
    MalformedFormat {
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("probe vector is not unit length (norm = {norm})")]
    NonUnitProbe { norm: f64 },

    #[error("matrix is not positive definite: pivot {pivot} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("Cholesky factor too short to extend: length {0}, need at least 2")]
    TooShort(usize),

    #[error("continued fraction hit a pole at z = {z} (level {level})")]
    PoleHit { z: f64, level: usize },

    #[error("density is negative ({value}) at lambda = {lambda}")]
    NegativeDensity { lambda: f64, value: f64 },

    #[error("Lanczos broke down after {steps} step(s); need at least 3")]
    BreakdownBeforeMinimum { steps: usize },

    #[error("averaging window of length {q} does not fit probe {probe} with {len} Cholesky columns")]
    WindowTooLong { q: usize, probe: usize, len: usize },

    #[error("symbol polynomial vanished after trimming")]
    DegeneratePolynomial,

    #[error("Joukowski map undefined at z = {0}")]
    JoukowskiDomain(f64),

    #[error("pole weight {weight} at z = {root} is not positive")]
    NonPositiveWeight { root: f64, weight: f64 },

    #[error("symbol roots {a} and {b} are too close to be resolved as simple")]
    NearMultipleRoot { a: f64, b: f64 },

    #[error("eigensolver failed to converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("function f has a pole at m = {0}")]
    PoleOfF(String),

    #[error("probe {probe} failed: {source}")]
    Probe {
        probe: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
