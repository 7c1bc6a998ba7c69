use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cell {cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("non-finite result: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Core(#[from] qnnp_core::Error),

    #[error(transparent)]
    Quantum(#[from] qnnp_quantum::Error),

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_cell(self, cell: impl Into<String>) -> Self {
        Error::Cell {
            cell: cell.into(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config { .. } | Error::InvalidConfig(_) => "config",
            Error::Cell { source, .. } => source.kind(),
            Error::NonFinite(_) => "non_finite",
            Error::Core(e) => e.kind(),
            Error::Quantum(e) => e.kind(),
            Error::Csv { .. } => "csv",
            Error::Io { .. } => "io",
        }
    }
}
