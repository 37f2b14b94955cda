use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("start position {x:.3},{y:.3} is blocked")]
    InvalidStart { x: f64, y: f64 },

    #[error("no path to goal")]
    NoPath,

    #[error("mission sampling exhausted after {attempts} attempts")]
    SamplingExhausted { attempts: usize },

    #[error("pose of robot {robot} is stale ({age:.3}s old)")]
    StaleSnapshot { robot: u32, age: f64 },

    #[error("cell has no trial results")]
    EmptyCell,

    #[error("{context}: {message}")]
    Io { context: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, err: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            message: err.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
