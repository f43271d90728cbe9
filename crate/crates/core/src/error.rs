use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector lies in the semi-norm kernel (observed coordinates all zero)")]
    KernelVector,

    #[error("not representable on the unit cylinder: {reason}")]
    NotRepresentable { reason: String },

    #[error("alpha = 1 log-integrability condition fails: {reason}")]
    LogConditionFail { reason: String },

    #[error("conditioning set carries zero spectral mass")]
    ZeroConditioningMass,

    #[error("observed pattern matches no atom within tolerance {tol}")]
    NoMatch { tol: f64 },

    #[error("truncation tolerance {tol:e} unreachable within {max_lag} lags (tail bound {bound:e})")]
    TruncationUnreachable { tol: f64, max_lag: i64, bound: f64 },

    #[error("too few exceedances: {found} < {needed}")]
    TooFewExceedances { found: usize, needed: usize },

    #[error("conditioning arc fits none of the supported cases: {reason}")]
    UnsupportedConditioning { reason: String },

    #[error("unknown coefficient kind `{0}`")]
    UnknownKind(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
