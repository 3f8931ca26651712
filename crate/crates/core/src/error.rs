use thiserror::Error;

/// Errors raised by model construction, simulation and inference.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("missing parameter `{0}`")]
    MissingParameter(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("covariates do not cover [{start:.5}, {end:.5}] (available [{avail_start:.5}, {avail_end:.5}])")]
    CovariateGap {
        start: f64,
        end: f64,
        avail_start: f64,
        avail_end: f64,
    },

    #[error("missing rainfall for unit {unit} at time {time:.5}")]
    MissingRainfall { unit: String, time: f64 },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite derivative in compartment `{0}`")]
    NonFiniteDerivative(String),

    #[error("non-finite objective at start: {0}")]
    NonFiniteObjective(String),

    #[error("all candidate log-likelihoods are -inf")]
    NoFiniteCandidate,

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
