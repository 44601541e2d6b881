use std::path::PathBuf;

use crate::sim::{Cycles, GpuId};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value is missing, malformed or violates an invariant.
    #[error("invalid configuration `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("no link between gpu {src} and gpu {dst}")]
    Routing { src: GpuId, dst: GpuId },

    #[error("cannot schedule at cycle {requested}: simulation is already at cycle {now}")]
    TimeTravel { requested: Cycles, now: Cycles },

    #[error("character {ch:?} at position {position} is outside the 7-bit character set")]
    Encoding { ch: char, position: usize },

    #[error("framing error: {0}")]
    Framing(String),

    #[error("no preamble found within {slots} slots")]
    SyncTimeout { slots: usize },

    #[error("frame announces {needed} more bits but only {available} slots remain")]
    Truncated { needed: usize, available: usize },

    #[error("{what}: need at least {min} samples, got {got}")]
    TooFewSamples { what: &'static str, min: usize, got: usize },

    #[error("calibration is degenerate: {0}")]
    Calibration(String),

    #[error("classifier: {0}")]
    Classifier(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
