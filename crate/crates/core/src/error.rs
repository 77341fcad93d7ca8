use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("bit strings differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid character {0:?} in bit string")]
    InvalidBitString(char),
    #[error("invalid protocol parameters: {0}")]
    InvalidParams(String),
    #[error("value {value:#x} does not fit in {width} bits")]
    ValueTooWide { value: u64, width: usize },
    #[error("index {index} outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("duplicate refresh index {0}")]
    DuplicateIndex(usize),
    #[error("operation requires a dense refresh vector")]
    SparseRefresh,
    #[error("refresh vector has {got} entries, expected {expected}")]
    RefreshLength { expected: usize, got: usize },
    #[error("refresh count {r} outside 1..={n}")]
    RefreshCount { r: usize, n: usize },

    #[error("message truncated: need {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("unsupported wire version {0:#04x}")]
    UnsupportedVersion(u8),
    #[error("unknown protocol id {0:#04x}")]
    UnknownProtocol(u8),
    #[error("malformed frame: {0}")]
    MalformedFrame(String),

    #[error("unknown generator id {0:?}")]
    UnknownGenerator(String),

    #[error("a session is already pending")]
    SessionPending,
    #[error("no session is pending")]
    NoPendingSession,
    #[error("keyword {0} is not in the configured keyword set")]
    UnknownKeyword(String),
    #[error("protocol mismatch: expected {expected}, got {got}")]
    ProtocolMismatch { expected: String, got: String },

    #[error("invalid frame layout: {0}")]
    InvalidLayout(String),

    #[error("infeasible listening pattern: {0}")]
    InfeasiblePattern(String),
    #[error("configuration error: {0}")]
    Config(String),

    #[error("tag id {0:?} is already registered")]
    DuplicateTag(String),
    #[error("tag id {0:?} is not registered")]
    UnknownTag(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
