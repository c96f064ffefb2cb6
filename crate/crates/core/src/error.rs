use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` out of range: {value} (expected {expected})")]
    Parameter {
        name: &'static str,
        value: i64,
        expected: &'static str,
    },

    /// Even the largest allowed grant cannot carry the per-period volume.
    #[error(
        "infeasible allocation: {required_bits} bits per grant required, at most {max_bits} bits \
         in {max_prbs} PRBs (deficit {deficit_bits} bits)"
    )]
    Infeasible {
        required_bits: f64,
        max_bits: u32,
        max_prbs: u32,
        deficit_bits: f64,
    },

    #[error(
        "oversubscribed: subframe {subframe} needs {demand} persistent PRBs, cell has {capacity}"
    )]
    Oversubscribed {
        subframe: u64,
        demand: u32,
        capacity: u32,
    },

    #[error(
        "telemetry calibration failed: message-rate residual {rate_residual:+.4}, \
         bit-rate residual {bitrate_residual:+.4}"
    )]
    Calibration {
        rate_residual: f64,
        bitrate_residual: f64,
    },

    #[error("empty sample")]
    EmptySample,

    #[error("{origin}:{line}: {msg}")]
    Parse {
        origin: String,
        line: usize,
        msg: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable tag used in machine-parsable CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter { .. } => "parameter",
            Error::Infeasible { .. } => "infeasible",
            Error::Oversubscribed { .. } => "oversubscribed",
            Error::Calibration { .. } => "calibration",
            Error::EmptySample => "empty-sample",
            Error::Parse { .. } => "parse",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
        }
    }
}
