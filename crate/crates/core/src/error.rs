// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ProbeError>;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic {found:?}, expected \"ACTV\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported ACTV version {0}")]
    UnsupportedVersion(u32),

    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: header declares {expected} payload bytes, {present} present")]
    Truncated { expected: u64, present: u64 },

    #[error("trailing data: header declares {expected} payload bytes, {present} present")]
    TrailingBytes { expected: u64, present: u64 },

    #[error("n·d = {n}·{d} overflows the addressable payload size")]
    SizeOverflow { n: u64, d: u64 },

    #[error("non-finite value {value} at row {row}, column {col}")]
    NonFinite { row: usize, col: usize, value: f32 },

    #[error("activation rows ({rows}) and metadata records ({records}) disagree")]
    CountMismatch { rows: usize, records: usize },

    #[error("duplicate sample_id {0:?}")]
    DuplicateSampleId(String),

    #[error("malformed metadata record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("sample {sample_id:?}: category {category} contradicts correct = {correct}")]
    CategoryContradiction {
        sample_id: String,
        category: String,
        correct: u8,
    },

    #[error("sample {sample_id:?}: {reason}")]
    InvalidRecord { sample_id: String, reason: String },

    #[error("empty class: {n_true} correct and {n_false} incorrect samples")]
    EmptyClass { n_true: usize, n_false: usize },

    #[error("degenerate direction: centroid gap norm {norm:e} is below 1e-12")]
    DegenerateDirection { norm: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("AUROC needs both classes ({n_pos} positive, {n_neg} negative)")]
    SingleClass { n_pos: usize, n_neg: usize },

    #[error("NaN score at index {0}")]
    NanScore(usize),

    #[error("class {label} has {count} samples, fewer than k = {k} folds")]
    ClassTooSmall { label: u8, count: usize, k: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("layer {layer}: {reason}")]
    InconsistentLayers { layer: u32, reason: String },

    #[error("sample {sample_id:?} appears in both the layer-selection pool and {dataset_id:?}")]
    OverlappingPools {
        sample_id: String,
        dataset_id: String,
    },

    #[error("subsample of size {size} cannot hold both classes ({n_true} correct, {n_false} incorrect available)")]
    Subsample {
        size: usize,
        n_true: usize,
        n_false: usize,
    },

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl ProbeError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ProbeError::Io {
            path: path.into(),
            source,
        }
    }
}
