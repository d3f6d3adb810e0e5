use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{name} must be positive and finite, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("{name} must be finite and non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("exchange {id:?}: {reason}")]
    InvalidExchange { id: String, reason: String },
    #[error("duplicate exchange id {0:?}")]
    DuplicateId(String),
    #[error("universe must contain at least {min} exchanges, got {got}")]
    UniverseTooSmall { min: usize, got: usize },
    #[error("event {seq} references exchange index {exchange}, universe has {size}")]
    UnknownExchange {
        seq: usize,
        exchange: usize,
        size: usize,
    },
    #[error("event {seq} at t={time} precedes the network clock t={clock}")]
    OutOfOrder { seq: usize, time: f64, clock: f64 },
    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),
    #[error("panel has {records} records for {events} events")]
    Misaligned { records: usize, events: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("gamma unidentifiable: {0}")]
    GammaUnidentifiable(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("calibration failed at every grid point ({} points)", .0.len())]
    AllPointsFailed(Vec<String>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("{0}")]
    Domain(String),
    #[error("inconsistent timeline: {0}")]
    Consistency(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One rejected input row: where it was and what was wrong with it.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub row: usize,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "row {}, field {}: {}", self.row, self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error("{path}: {} rejected row(s): {}", .errors.len(), join_rows(.errors))]
    Rows { path: String, errors: Vec<RowError> },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn join_rows(errors: &[RowError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
