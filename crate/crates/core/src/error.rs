use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {field}: {message}")]
    InvalidParameter { field: &'static str, message: String },

    #[error("tolerance {requested:e} unattainable: best achieved bound {achieved:e}")]
    ToleranceUnattainable { requested: f64, achieved: f64 },

    #[error("truncation order 2^{required_log2:.2} exceeds the cap 2^{cap_log2}")]
    TruncationUnattainable { required_log2: f64, cap_log2: u32 },

    #[error("no tail index: the innovation law has a finite fourth moment")]
    NoTailIndex,

    #[error("covariance series diverges for d = {d} (the Gaussian limit needs d < 1/4)")]
    CovarianceDiverges { d: f64 },

    #[error("innovations absent: the series was not simulated with retained innovations")]
    InnovationsAbsent,

    #[error("insufficient length: lag {lag} needs {needed} observations, series has {available}")]
    InsufficientLength {
        lag: usize,
        needed: usize,
        available: usize,
    },

    #[error("coefficient support {support} exceeds the series truncation order {order}")]
    SupportTooLong { support: usize, order: usize },

    #[error("regime boundary: {caveat}")]
    RegimeBoundary { caveat: String },

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("not region C: {0}")]
    NotRegionC(String),

    #[error("region B scaling requires the norming constant a_N")]
    MissingNorming,
}

impl Error {
    pub(crate) fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            message: message.into(),
        }
    }
}
