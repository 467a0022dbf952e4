use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate direction: points coincide")]
    DegenerateDirection,
    #[error("invalid primitive: {0}")]
    InvalidPrimitive(String),
    #[error("medium has no primitives")]
    EmptyMedium,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("exponential rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error(
        "majorant violated at query {x:?}: candidate center {center:?} has density {density} > majorant {majorant}"
    )]
    MajorantViolated { x: Vec3, center: Vec3, density: f64, majorant: f64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("invalid density: {0}")]
    Density(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("scene parse error: {0}")]
    Scene(String),
    #[error("grid file {path}: {msg}")]
    Grid { path: PathBuf, msg: String },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
