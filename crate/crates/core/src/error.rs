//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

use crate::signal::ChannelKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("schema mismatch for {channel}: {reason}")]
    SchemaMismatch { channel: String, reason: String },

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("model incompatible: {0}")]
    ModelIncompatible(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("degenerate comparison: {0}")]
    DegenerateComparison(String),

    #[error("{channel} ({step}): {source}")]
    Channel {
        channel: ChannelKind,
        step: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("ingestion error in {}{}{}: {reason}",
        file.display(),
        row.map(|r| format!(" row {r}")).unwrap_or_default(),
        column.as_ref().map(|c| format!(" column {c}")).unwrap_or_default())]
    Ingestion {
        file: PathBuf,
        row: Option<usize>,
        column: Option<String>,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("feature selection failed at k = {k}: {source}")]
    Selection {
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input or configuration rather than a
    /// failure while doing the work. The CLI maps these to exit code 1.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidArgument(_)
            | Error::SchemaMismatch { .. }
            | Error::Ingestion { .. }
            | Error::Config(_)
            | Error::Capacity(_) => true,
            Error::Channel { source, .. } | Error::Selection { source, .. } => {
                source.is_validation()
            }
            _ => false,
        }
    }
}
