use thiserror::Error;

/// Errors raised by state construction, conditioning, metrics and scenarios.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("window mass underflow: acceptance window [{lo}, {hi}] has mass {mass:e} (marginal mean {mean}, std {std})")]
    Underflow {
        lo: f64,
        hi: f64,
        mass: f64,
        mean: f64,
        std: f64,
    },

    #[error("accuracy: {0}")]
    Accuracy(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::NumericalDegeneracy(msg.into())
    }

    /// Process exit code: 2 configuration, 3 numerical degeneracy, 4 accuracy, 1 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::NumericalDegeneracy(_) | Error::Underflow { .. } => 3,
            Error::Accuracy(_) => 4,
            Error::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
