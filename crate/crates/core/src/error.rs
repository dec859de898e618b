use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("at least 4 waypoints are required, got {0}")]
    TooFewWaypoints(usize),
    #[error("consecutive waypoints coincide at index {0}")]
    DegenerateSegment(usize),
    #[error("invalid track spec: {0}")]
    InvalidSpec(String),
    #[error("vehicle is at the end of the reference path")]
    PathExhausted,
    #[error("numeric blowup in vehicle state")]
    NumericBlowup,
    #[error("box QP did not converge after {iterations} iterations (KKT residual {residual:e})")]
    QpFailure { iterations: usize, residual: f64 },
    #[error("empty batch")]
    EmptyBatch,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no data to fit")]
    EmptyData,
    #[error("unknown evaluation function `{0}`")]
    UnknownEvalId(String),
    #[error("episodic memory is empty")]
    EmptyMemory,
    #[error("trajectory too short for a {lookahead} m lookahead")]
    TrajectoryTooShort { lookahead: f64 },
    #[error("no test set for task {0}")]
    MissingTestSet(usize),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
