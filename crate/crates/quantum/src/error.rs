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

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{what} supports at most {max} qubits, got {n}")]
    TooManyQubits { what: &'static str, max: usize, n: usize },

    #[error("singular calibration matrix: {0}")]
    SingularCalibration(String),

    #[error("missing Hamiltonian for structure {index}: {message}")]
    MissingHamiltonian { index: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] qnnp_core::Error),
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
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::TooManyQubits { .. } => "too_many_qubits",
            Error::SingularCalibration(_) => "singular_calibration",
            Error::MissingHamiltonian { .. } => "missing_hamiltonian",
            Error::Io { .. } => "io",
            Error::Core(e) => e.kind(),
        }
    }
}
