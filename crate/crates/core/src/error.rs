use std::path::PathBuf;

use crate::events::EventId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mark {value} for {event}")]
    InvalidMark { event: EventId, value: f64 },

    #[error("incomplete decathlon: missing {missing:?}")]
    IncompleteDecathlon { missing: Vec<EventId> },

    #[error("duplicate mark for {0}")]
    DuplicateMark(EventId),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("column `{column}` has no spread (standard deviation {sd})")]
    DegenerateColumn { column: String, sd: f64 },

    #[error("cannot place spline knots: {0}")]
    KnotDegeneracy(String),

    #[error("numerical failure in {block} (chain {chain}, iteration {iteration}): {detail}")]
    NumericalFailure {
        block: String,
        chain: usize,
        iteration: usize,
        detail: String,
    },

    #[error("diagnostics unavailable: {0}")]
    DiagnosticsUnavailable(String),

    #[error("unknown athlete `{0}`")]
    UnknownAthlete(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("quantile {0} is outside the open unit interval")]
    InvalidQuantile(f64),

    #[error("{operation} is not supported for the {family} family")]
    UnsupportedFamily {
        family: &'static str,
        operation: &'static str,
    },

    #[error("SMSE undefined: {0}")]
    UndefinedSmse(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from bad input data rather than the numerics.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::NumericalFailure { .. })
    }
}
