use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the documented domain of an operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Inputs are individually valid but do not fit together (e.g. a cache
    /// sized for a different scheme).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("decode failure: {0}")]
    Decode(#[from] DecodeError),

    /// Exhaustive enumeration refused because the outcome space is too big.
    #[error("instance too large to enumerate: about {estimate} outcomes (limit {limit})")]
    TooLarge { estimate: String, limit: u64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

/// Structured decoder failure. A plan that does not carry enough side
/// information yields one of these, never a silently wrong message.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("database {db} sent {got} answers for {expected} queries")]
    AnswerLength { db: usize, expected: usize, got: usize },

    #[error("query {position} at database {db} mixes interference that is neither cached nor downloaded")]
    MissingSideInformation { db: usize, position: usize },

    #[error("desired bit {bit} is recovered more than once (or was already cached)")]
    DuplicateDesiredBit { bit: usize },

    #[error("{missing} desired bits were never recovered")]
    Incomplete { missing: usize },

    #[error("query {position} at database {db} references bit ({msg}, {bit}) outside the message store")]
    OutOfRange { db: usize, position: usize, msg: usize, bit: usize },
}
