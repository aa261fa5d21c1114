use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments: wrong shapes, mismatched dimensions, bad flags.
    #[error("{0}")]
    Input(String),
    /// Arguments outside the domain where a quantity exists.
    #[error("{0}")]
    Domain(String),
    /// A numerical routine could not reach its tolerance.
    #[error("numerical failure: {message}")]
    Numerical { message: String, diagnostics: Vec<(String, f64)> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
