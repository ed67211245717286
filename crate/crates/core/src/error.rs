use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched lengths, out-of-range indices, malformed vectors.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    /// No visited configuration satisfied the QBER security threshold.
    #[error("no feasible configuration: best QBER {best_qber:.4} exceeds threshold {threshold}")]
    Infeasible { best_qber: f64, threshold: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }
}
