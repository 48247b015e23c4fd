use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("unknown wavelet filter `{0}`")]
    UnknownFilter(String),

    #[error("level {level} out of range 0..={max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("invalid normalizer for treatment {treatment}: gamma_hat = {value}")]
    InvalidNormalizer { treatment: usize, value: f64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("numerical routine did not converge: {0}")]
    Convergence(String),
}

impl Error {
    /// True for failures of an iterative numerical routine, as opposed to bad
    /// input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Convergence(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
