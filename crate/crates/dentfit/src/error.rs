//! Error types shared across the crate.

use thiserror::Error;

/// Errors from model evaluation and height-field construction.
#[derive(Debug, Error)]
pub enum ModelError {
    /// A parameter or evaluation point is outside its documented range.
    #[error("{0}")]
    Domain(String),
    /// The radial-ratio gradient is undefined at the origin.
    #[error("radial ratio gradient is undefined at (0, 0)")]
    SingularGradient,
    /// A requested grid would exceed the cell cap.
    #[error("height field of {cells} cells exceeds the cap of {cap}")]
    GridTooLarge { cells: usize, cap: usize },
    /// A height field contains no finite cells.
    #[error("height field has no cells inside the support")]
    EmptyField,
    /// A serialized height field could not be read.
    #[error("malformed height-field data: {0}")]
    MalformedField(String),
}

/// Errors from point-cloud ingestion and geometry.
#[derive(Debug, Error)]
pub enum CloudError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("unsupported format: {detected} (only ascii is handled)")]
    UnsupportedFormat { detected: String },
    #[error("missing vertex property `{name}`")]
    MissingProperty { name: &'static str },
    #[error("degenerate geometry: points do not span a plane")]
    DegenerateGeometry,
    #[error("robust plane fit failed: best consensus covers {got} of {total} points (need half)")]
    RobustFitFailed { got: usize, total: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors from model fitting.
#[derive(Debug, Error)]
pub enum FitError {
    #[error("segment carries no depth signal (all heights zero)")]
    DegenerateSegment,
    #[error("segment is empty")]
    EmptySegment,
    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
