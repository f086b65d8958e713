use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum PltError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is outside the supported range [2, 2^31)")]
    ModulusOutOfRange(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("field of size {q} is too small for {k} messages")]
    FieldTooSmall { q: u64, k: usize },
    #[error("invalid demand: {0}")]
    InvalidDemand(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("plan too large: {0}")]
    SizeGuard(String),
    #[error("index out of range: {0}")]
    BadIndex(String),
    #[error("demanded function is not decodable: {0}")]
    Undecodable(String),
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("count {0} does not fit in a u32")]
    Overflow(usize),
    #[error("connection to {endpoint} failed: {source}")]
    ConnectionFailed {
        endpoint: String,
        #[source]
        source: std::io::Error,
    },
    #[error("server reported error {code}: {message}")]
    Remote { code: u32, message: String },
    #[error("no protocol available for demand dimension {0}")]
    NoProtocol(usize),
    #[error("signature space too large: {0}")]
    ParamsTooLarge(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PltError {
    /// Stable variant name, used by the CLI when reporting failures.
    pub fn name(&self) -> &'static str {
        match self {
            PltError::NotPrime(_) => "NotPrime",
            PltError::ModulusOutOfRange(_) => "ModulusOutOfRange",
            PltError::DivisionByZero => "DivisionByZero",
            PltError::FieldTooSmall { .. } => "FieldTooSmall",
            PltError::InvalidDemand(_) => "InvalidDemand",
            PltError::InvalidParams(_) => "InvalidParams",
            PltError::SizeGuard(_) => "SizeGuard",
            PltError::BadIndex(_) => "BadIndex",
            PltError::Undecodable(_) => "Undecodable",
            PltError::InternalInvariant(_) => "InternalInvariant",
            PltError::DimensionMismatch(_) => "DimensionMismatch",
            PltError::Malformed(_) => "Malformed",
            PltError::Overflow(_) => "Overflow",
            PltError::ConnectionFailed { .. } => "ConnectionFailed",
            PltError::Remote { .. } => "Remote",
            PltError::NoProtocol(_) => "NoProtocol",
            PltError::ParamsTooLarge(_) => "ParamsTooLarge",
            PltError::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, PltError>;
