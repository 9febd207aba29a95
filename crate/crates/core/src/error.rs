use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("actuator limit exceeded: |{value}| > {limit}")]
    ActuatorLimit { value: f64, limit: f64 },

    #[error("pose ({x:.3}, {y:.3}) lies inside an obstacle or outside the map")]
    PoseInObstacle { x: f64, y: f64 },

    #[error("covariance is not positive semi-definite")]
    NotPsd,

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("timestamp mismatch: {a:.4} s vs {b:.4} s exceeds {tol:.4} s")]
    TimestampMismatch { a: f64, b: f64, tol: f64 },

    #[error("normal equations are singular even after damping")]
    SingularSystem,

    #[error("grid shape mismatch: {0}")]
    GridMismatch(String),

    #[error("{0}")]
    InsufficientData(String),

    #[error("malformed environment {path}: {reason}")]
    MalformedEnvironment { path: PathBuf, reason: String },

    #[error("environment is not bounded: free cell on the border at ({ix}, {iy})")]
    UnboundedEnvironment { ix: usize, iy: usize },

    #[error("start pose ({x:.3}, {y:.3}) is not in free space")]
    StartInObstacle { x: f64, y: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("trial failed: {0}")]
    TrialFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command line front-end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 2,
            Error::MalformedEnvironment { .. }
            | Error::UnboundedEnvironment { .. }
            | Error::StartInObstacle { .. } => 3,
            Error::TrialFailed(_) => 4,
            _ => 1,
        }
    }
}
