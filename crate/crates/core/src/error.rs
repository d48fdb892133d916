use std::path::PathBuf;

use thiserror::Error;

use crate::solver::SearchCounters;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied an invalid argument.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    /// Order variables violate antisymmetry or transitivity.
    #[error("order variables invalid: {0}")]
    Constraint(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed solution file {path}: {message}")]
    Solution { path: PathBuf, message: String },

    /// The wall-clock budget ran out before both search trees were complete.
    /// No incumbent exists at that point, only the work done so far.
    #[error("time limit exceeded after {} expanded nodes", .0.expanded())]
    Timeout(Box<SearchCounters>),

    #[error("row with C({n},{size}) = {slots} slots exceeds the cap of {cap} slots")]
    Resource {
        n: usize,
        size: usize,
        slots: u64,
        cap: u64,
    },

    /// Internal invariant broken; always a bug.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
