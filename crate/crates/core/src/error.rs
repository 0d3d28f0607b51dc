use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration violates its structural invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A move `Psi_{r,s}` was requested with unusable times.
    #[error("invalid move ({r}, {s}): {reason}")]
    InvalidMove { r: f64, s: f64, reason: &'static str },

    #[error("configurations of different kinds cannot be compared")]
    VariantMismatch,

    #[error("oracle scale exceeded: {0}")]
    OracleScale(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A thinning proposal had acceptance probability above one.
    #[error("birth majorant violated: H = {ratio} exceeds bound {bound}")]
    MajorantViolated { ratio: f64, bound: f64 },

    #[error("nonpositive jump rate {rate} at level {level}")]
    NonPositiveRate { level: i64, rate: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::MajorantViolated { .. } | Error::NonPositiveRate { .. } | Error::Numerical(_)
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
