use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("impulse response bank: {0}")]
    Bank(String),

    /// Malformed container: bad magic, unsupported version, bad RIFF data.
    #[error("format error: {0}")]
    Format(String),

    #[error("truncated input: needed {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },

    #[error("checksum mismatch in {section} (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum {
        section: &'static str,
        stored: u32,
        computed: u32,
    },

    /// Well-formed bytes that decode to a value violating a type invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
