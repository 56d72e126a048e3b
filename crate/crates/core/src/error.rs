use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid intersection config: {0}")]
    Config(String),
    #[error("invalid trajectory {id}: {reason}")]
    Trajectory { id: String, reason: String },
    #[error("series is constant; normalization and correlation are undefined")]
    ConstantSeries,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("no events to estimate a density from")]
    NoEvents,
    #[error("trajectory {0} has no velocities")]
    MissingVelocity(String),
    #[error("invalid signal log: {0}")]
    SignalLog(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T> = core::result::Result<T, Error>;
