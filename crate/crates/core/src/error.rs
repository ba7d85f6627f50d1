use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model or estimator was configured with invalid parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// An iterative numerical routine did not succeed.
    #[error("numerical error in {routine}: {detail}")]
    Numerical { routine: &'static str, detail: String },

    /// An estimate could not be formed, e.g. every grid point was trimmed.
    #[error("estimation failed: {0}")]
    Estimation(String),

    /// A regression fit did not converge or diverged.
    #[error("fit failed ({model}): {detail}")]
    Fit { model: &'static str, detail: String },
}

impl Error {
    pub(crate) fn numerical(routine: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            routine,
            detail: detail.into(),
        }
    }
}
