use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid fading distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid channel parameters: {0}")]
    InvalidChannel(String),

    #[error("infinite capacity: noise variance is zero")]
    InfiniteCapacity,

    #[error("channel output overflow")]
    ChannelOutputOverflow,

    #[error("period too short: {period} slots for {required} active coordinates")]
    PeriodTooShort { period: usize, required: usize },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid plant: {0}")]
    InvalidPlant(String),

    #[error("uncontrollable pair")]
    Uncontrollable,

    #[error("horizon overflow at step {step}")]
    HorizonOverflow { step: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
