use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Item parameters outside the 3PL domain (a > 0, 0 <= c < 1, finite b).
    #[error("invalid item parameters: {0}")]
    Parameter(String),

    #[error("item id {id} is not in the bank (m = {m})")]
    Membership { id: usize, m: usize },

    #[error("curves are tabulated on different grids")]
    GridMismatch,

    /// Target information must be strictly positive wherever it is tabulated.
    #[error("target information {value} at theta = {theta} is not positive")]
    TargetDomain { theta: f64, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("C({m},{n}) = {count} subsets exceeds the enumeration budget of {budget}")]
    Budget { m: usize, n: usize, count: String, budget: u64 },

    #[error("no swap possible: the test already contains every bank item")]
    NoMove,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
