use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: face has no texture coordinate references")]
    MissingUv { line: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate faces (area <= 1e-12): {0:?}")]
    DegenerateFaces(Vec<usize>),

    #[error("isolated vertices without neighbours: {0:?}")]
    IsolatedVertices(Vec<usize>),

    #[error("non-manifold edge ({a}, {b}) shared by {count} faces")]
    NonManifoldEdge { a: usize, b: usize, count: usize },

    #[error("{what}: expected {expected}, got {actual}")]
    DimensionMismatch { what: String, expected: usize, actual: usize },

    #[error("topology mismatch: {0}")]
    TopologyMismatch(String),

    #[error("vertex {vertex}: blended dual quaternion has zero real part")]
    AntipodalBlend { vertex: usize },

    #[error("vertex {vertex} is not connected to any graph node")]
    DisconnectedVertex { vertex: usize },

    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("point outside the texture-space domain: {0}")]
    OutOfDomain(String),

    #[error("samples out of texture-space range: {0:?}")]
    OutOfRange(Vec<usize>),

    #[error("inverse mapping requires a face-case result, got {0}")]
    NotFaceCase(String),

    #[error("pixel ({x}, {y}) outside {width}x{height} image")]
    PixelOutOfBounds { x: usize, y: usize, width: usize, height: usize },

    #[error("motion window needs {needed} frames, got {got}")]
    WindowTooShort { needed: usize, got: usize },

    #[error("tensor file: {0}")]
    Tensor(String),

    #[error("optimization diverged at iteration {iteration} (weighted loss trace: {trace:?})")]
    Diverged { iteration: usize, trace: Vec<f64> },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn dim(what: impl Into<String>, expected: usize, actual: usize) -> Self {
        Self::DimensionMismatch { what: what.into(), expected, actual }
    }
}
