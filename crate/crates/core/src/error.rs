use std::path::PathBuf;

/// Errors shared across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}, column {column}: cannot parse {value:?} as a number")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        value: String,
    },

    #[error("{path}: line {line} has {got} columns, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        line: usize,
        expected: usize,
        got: usize,
    },

    #[error("{path}: file contains no data rows")]
    EmptyFile { path: PathBuf },

    #[error("label column {name:?} not found in header")]
    LabelColumnNotFound { name: String },

    #[error("label column index {index} out of range for {width} columns")]
    LabelColumnOutOfRange { index: usize, width: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fold count {fold_count} out of range for {n} points (need 2 <= folds <= n)")]
    FoldCountOutOfRange { fold_count: usize, n: usize },

    #[error("classification task needs at least 2 classes, found {found}")]
    SingleClass { found: usize },

    #[error("prediction and truth lists must be equal-length and non-empty ({predicted} vs {truth})")]
    LengthMismatch { predicted: usize, truth: usize },

    #[error("neighbor count k={k} out of range (valid: {min} <= k <= {max})")]
    KOutOfRange { k: usize, min: usize, max: usize },

    #[error("invalid hyperparameters: {reason}")]
    InvalidHyperparams { reason: String },

    #[error("matrix is not symmetric (max asymmetry {max_asym:.3e})")]
    NotSymmetric { max_asym: f64 },

    #[error("negative curvature along a search direction; problem is not convex")]
    Indefinite { direction: Vec<f64> },

    #[error("multiplier vector leaves the box [0, {upper}] by {violation:.3e}")]
    OutsideBox { upper: f64, violation: f64 },

    #[error("{stage} did not converge (outer iteration {outer}, point {point:?}: residual {residual:.3e} after {iterations} iterations)")]
    SolverStalled {
        stage: &'static str,
        outer: usize,
        point: Option<usize>,
        iterations: usize,
        residual: f64,
    },

    #[error("no models supplied for multiclass prediction")]
    EmptyModelList,

    #[error("cannot map binary prediction back to a class: model lacks a negative class id")]
    MissingNegativeClass,

    #[error("model artifact format version {found} is not supported (expected {expected})")]
    UnsupportedModelVersion { found: u32, expected: u32 },

    #[error("failed to decode model artifact: {0}")]
    ModelDecode(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
