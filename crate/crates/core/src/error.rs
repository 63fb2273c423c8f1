use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient smoothness: derivative of order {needed} requested, {available} available")]
    InsufficientSmoothness { needed: usize, available: usize },

    /// The operation needs pointwise values, but the input is a singular distribution.
    #[error("'{0}' is not a regular function")]
    NotRegular(String),

    #[error("bell profile '{0}' is not orthonormal on the half-line")]
    NotOrthonormal(String),

    #[error("unknown corpus id '{0}'")]
    UnknownCorpusId(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
