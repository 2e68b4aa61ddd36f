use thiserror::Error;

/// Errors produced by the spherical filtering library.
#[derive(Debug, Error)]
pub enum SphError {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("bandwidth mismatch: {left} vs {right}")]
    BandwidthMismatch { left: usize, right: usize },

    #[error("grid {n_beta}x{n_alpha} cannot integrate bandwidth {bandwidth} exactly")]
    Undersampled {
        bandwidth: usize,
        n_beta: usize,
        n_alpha: usize,
    },

    #[error("rank-deficient least-squares design at degree {degree}")]
    RankDeficient { degree: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SphError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(SphError::Domain(msg.into()))
}

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> SphError {
    SphError::Parse {
        line,
        msg: msg.into(),
    }
}
