use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module of the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("non-finite numeric input: {0}")]
    NonFinite(String),
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error("scheduling error: {0}")]
    Schedule(String),
    #[error("level scheme error: {0}")]
    Scheme(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("rank-deficient data: {0}")]
    Rank(String),
    #[error("ambiguous data: {0}")]
    Ambiguous(String),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("fidelity undefined: no counts in either projection")]
    UndefinedFidelity,
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{name} = {value}")))
    }
}
