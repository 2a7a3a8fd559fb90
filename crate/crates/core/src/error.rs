use thiserror::Error;

/// Errors raised by the cost model, the scenario engine and the analytics layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid policy field `{name}`: {reason}")]
    InvalidPolicy { name: &'static str, reason: String },

    #[error("time {t} is outside the simulation horizon [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("non-finite input `{0}`")]
    NonFinite(&'static str),

    #[error("unknown scenario `{name}` (valid names: {valid})")]
    UnknownScenario { name: String, valid: String },

    #[error("operation requires a {expected} policy, got {actual}")]
    WrongKind { expected: &'static str, actual: String },

    #[error("policy-arm cost must be positive, got {0}")]
    NonPositiveCost(f64),

    #[error("trajectories are on different grids")]
    GridMismatch,

    #[error("ROI is not monotone in gamma near gamma = {gamma}")]
    NonMonotone { gamma: f64 },

    #[error("invalid axis `{name}`: {reason}")]
    InvalidAxis { name: &'static str, reason: String },

    #[error("sweep cell (delta = {delta}, gamma = {gamma}) failed: {source}")]
    SweepCell {
        delta: f64,
        gamma: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("Monte Carlo draw {index} (delta = {delta}) failed: {source}")]
    Draw {
        index: u64,
        delta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("failed to parse parameter file: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
