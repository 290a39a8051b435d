use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("matrix is singular (or numerically singular) in {0}")]
    Singular(&'static str),

    #[error("invalid rank {rank}: must satisfy 1 <= rank <= {max}")]
    InvalidRank { rank: usize, max: usize },

    #[error("QPSK mapping needs an even number of bits, got {0}")]
    OddBitCount(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            actual,
        }
    }

    /// Process exit code used by the CLI: 1 for configuration/input problems,
    /// 2 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Parse(_) | Error::Io(_) | Error::InvalidRank { .. } => 1,
            Error::Dimension { .. }
            | Error::Singular(_)
            | Error::NonFinite(_)
            | Error::OddBitCount(_)
            | Error::LengthMismatch { .. } => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
