use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("degenerate statistics: {0}")]
    DegenerateStatistics(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("missing label: {0}")]
    MissingLabel(String),

    #[error("unknown element {0}")]
    UnknownElement(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("index {index} out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("training diverged at epoch {epoch}: {message}")]
    Diverged { epoch: usize, message: String },

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

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Format(_) => "format",
            Error::InvalidStructure(_) => "invalid_structure",
            Error::DegenerateStatistics(_) => "degenerate_statistics",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::LengthMismatch(_) => "length_mismatch",
            Error::MissingLabel(_) => "missing_label",
            Error::UnknownElement(_) => "unknown_element",
            Error::Geometry(_) => "geometry",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::EmptyDataset(_) => "empty_dataset",
            Error::Diverged { .. } => "diverged",
            Error::Io { .. } => "io",
        }
    }
}
