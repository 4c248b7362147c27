use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("constellation order {0} must be a power of two between 2 and 65536")]
    InvalidOrder(usize),
    #[error("QAM order {0} must be an even power of two")]
    NonSquareQam(usize),
    #[error("expected {expected} bits, got {got}")]
    BitLength { expected: usize, got: usize },
    #[error("bit value {0} is neither 0 nor 1")]
    InvalidBit(u8),
    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),
    #[error("operation requires {expected}, configuration is {got}")]
    SchemeMismatch { expected: &'static str, got: &'static str },
    #[error("{what} index {index} out of range 1..={max}")]
    IndexOutOfRange { what: &'static str, index: usize, max: usize },
    #[error("codebook of 2^{bits} codewords exceeds the enumeration guard of 2^{limit}")]
    CodebookTooLarge { bits: usize, limit: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("codebook needs at least two codewords")]
    EmptyCodebook,
    #[error("codewords {0} and {1} are identical")]
    DuplicateCodeword(usize, usize),
    #[error("pairwise error probability is undefined for identical codewords")]
    IdenticalPair,
    #[error("no rotation angle on the grid achieves full diversity")]
    NoFullDiversityAngle,
    #[error("invalid angle search: {0}")]
    InvalidSearch(String),
    #[error("need at least {needed} resolved points, found {found}")]
    InsufficientPoints { needed: usize, found: usize },
    #[error("invalid simulation plan: {0}")]
    InvalidPlan(String),
}
