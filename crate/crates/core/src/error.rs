use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("conditioning on a null event: {0}")]
    NullConditioning(String),

    #[error("malformed path: {0}")]
    MalformedPath(String),

    #[error("distribution is not normalized: masses sum to {0}")]
    NotNormalized(String),

    #[error("negative mass {0}")]
    NegativeMass(String),

    #[error("enumeration of {size} configurations exceeds the limit of {limit}")]
    SizeLimit { size: u128, limit: u64 },

    #[error("unknown predicate {0:?}")]
    UnknownPredicate(String),

    #[error("denominator of {value} does not divide {modulus}")]
    DenominatorMismatch { value: String, modulus: String },
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($fmt:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;
