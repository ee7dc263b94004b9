use thiserror::Error;

/// Errors raised anywhere in the codec.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("input truncated at byte offset {offset}: expected {expected} bytes")]
    TruncatedInput { offset: usize, expected: usize },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("structure error: {0}")]
    Structure(String),

    #[error("codebook error: {0}")]
    Codebook(String),

    #[error("value {value} out of range for bound {bound}")]
    Range { value: u64, bound: u64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("bitstream error at bit offset {bit_offset}: {reason}")]
    Bitstream { bit_offset: usize, reason: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("unusable stream: {0}")]
    UnusableStream(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, CodecError>;
