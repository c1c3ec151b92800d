use thiserror::Error;

pub type Result<T> = std::result::Result<T, GeomError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid hyperplane: {0}")]
    InvalidHyperplane(String),

    #[error("point set is not contained in an open hemisphere")]
    NotProper,

    #[error("density has zero mass")]
    EmptyDensity,

    #[error("rejection sampler too inefficient: acceptance rate {acceptance:.3e} after {attempts} proposals")]
    Efficiency { acceptance: f64, attempts: u64 },

    #[error("too few samples: {m} (need at least {min})")]
    TooFewSamples { m: usize, min: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid format error: {0}")]
    Format(String),
}
