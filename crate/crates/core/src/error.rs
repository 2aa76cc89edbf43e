use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interval [{a}, {b}]: need finite a < b")]
    InvalidInterval { a: f64, b: f64 },

    #[error("degenerate process: {0}")]
    DegenerateProcess(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("empty sample")]
    EmptySample,

    #[error("no events: every observation is censored")]
    NoEvents,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate estimate: {0}")]
    DegenerateEstimate(String),

    #[error("degenerate envelope: acceptance rate {rate:.3e} is below 1e-3")]
    DegenerateEnvelope { rate: f64 },

    #[error("negative reference hazard {value:.3e} at t = {at}")]
    NegativeHazard { at: f64, value: f64 },

    #[error("grid too narrow: argmax attained at the grid boundary {at}")]
    GridTooNarrow { at: f64 },

    #[error("model functions violate positivity: {0}")]
    ModelAssumption(String),

    #[error("inversion failure: {0}")]
    InversionFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
