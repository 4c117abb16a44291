use thiserror::Error;

/// Errors raised by geometry, quadrature and experiment code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point lies on or beyond the cut locus: distance {distance} vs injectivity bound {inj}")]
    CutLocus { distance: f64, inj: f64 },

    #[error("kernel is singular at z = x")]
    Singularity,

    #[error("evaluation point too close to the smooth-domain boundary: margin {margin} < {required}")]
    Domain { margin: f64, required: f64 },

    #[error("far-field tail bound {bound} exceeds the tolerance {tolerance}")]
    Tail { bound: f64, tolerance: f64 },

    #[error("contact point sits on the search-grid boundary at distance {distance} (radius {radius})")]
    Localization { distance: f64, radius: f64 },

    #[error("no admissible ring found up to k = {k_cap}")]
    SearchExhausted { k_cap: usize },

    #[error("no grid value satisfies the criterion (largest tried: {last})")]
    GridExhausted { last: f64 },

    #[error("point is outside the decomposed domain")]
    OutOfDomain,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("could not parse specification `{spec}`: {reason}")]
    Parse { spec: String, reason: String },

    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
