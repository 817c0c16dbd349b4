use std::path::PathBuf;

use crate::model::VmId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A trace or catalog row that does not match its schema. `line` is 1-based.
    #[error("schema error at line {line}: {message}")]
    Schema { line: u64, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown vm {0}")]
    UnknownVm(VmId),

    #[error("vm {0} is already placed")]
    AlreadyPlaced(VmId),

    #[error("pm index {0} out of range")]
    UnknownPm(usize),

    /// A highest-priority VM fits nowhere and cannot leave the provider.
    #[error("infeasible instance: vm {0} has the highest SLA level and cannot be placed")]
    Infeasible(VmId),

    #[error("event for time {event} applied at clock {clock}")]
    ClockMismatch { event: u32, clock: u32 },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("placement invariant violated at t={t}: {detail}")]
    Invariant { t: u32, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
