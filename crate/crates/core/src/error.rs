use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network size: need m_aps > l_ues >= 1, got m_aps={m_aps}, l_ues={l_ues}")]
    InvalidNetworkSize { m_aps: usize, l_ues: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no user has positive transmit power")]
    NoActivePower,

    #[error("side-information rows are rank deficient under the current power allocation")]
    SingularSideInformation,

    #[error("rank target {target} unreachable, achieved rank {achieved}")]
    RankUnreachable { target: usize, achieved: usize },

    #[error("modulus {0} is not prime")]
    NotPrime(u64),

    #[error("exhaustive search supports at most 4 users, got {0}")]
    OracleTooLarge(usize),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
