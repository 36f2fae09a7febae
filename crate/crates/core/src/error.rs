use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("capacity error: index {requested} exceeds capacity {capacity}")]
    Capacity { requested: u64, capacity: u64 },

    /// A declared growth envelope or boundedness contract was violated.
    #[error("contract error: {0}")]
    Contract(String),

    #[error("root iteration did not converge after {sweeps} sweeps ({} roots pending)", unconverged.len())]
    NoConvergence { sweeps: usize, unconverged: Vec<usize> },

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("contour passes too close to a zero near z = {re} + {im}i")]
    ContourTooClose { re: f64, im: f64 },

    /// The scaled function value sits below the floating-point noise floor.
    #[error("function value unresolvable in double precision near z = {re} + {im}i")]
    Unresolved { re: f64, im: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The innermost error, looking through stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit status for command-line use.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Parameter(_) | Error::Capacity { .. } | Error::Contract(_) => 2,
            Error::NoConvergence { .. }
            | Error::Certification(_)
            | Error::ContourTooClose { .. }
            | Error::Unresolved { .. } => 3,
            Error::Stage { .. } | Error::Io { .. } | Error::Format(_) => 1,
        }
    }
}
