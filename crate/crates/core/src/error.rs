use thiserror::Error;

#[derive(Debug, Error)]
pub enum NmsError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid detection: {0}")]
    Validation(String),
    #[error("{count} detections exceed capacity d_max = {d_max}")]
    Capacity { count: usize, d_max: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid workload: {0}")]
    Workload(String),
    /// An engine result broke a property that must hold for every input.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = NmsError> = std::result::Result<T, E>;
