use thiserror::Error;

/// Errors raised by the source, channel, estimation and optimization models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid number of heralded units: {0}")]
    InvalidM(String),

    #[error("parameter out of range: {0}")]
    InvalidRange(String),

    #[error("operation not supported for source kind {0}")]
    UnsupportedSource(&'static str),

    #[error("conditional branch probability {0:e} is too small to condition on")]
    DegenerateBranch(f64),

    #[error("negative channel loss: {0} dB")]
    NegativeLoss(f64),

    #[error("zero yield for {0}-photon pulses")]
    ZeroYield(usize),

    #[error("argument {0} outside [0, 1]")]
    OutOfDomain(f64),

    #[error("branch statistics are indistinguishable (denominator {0:e})")]
    DegenerateStatistics(f64),

    #[error("single-photon yield lower bound is zero")]
    DegenerateBounds,

    #[error("rate is zero over the whole search grid")]
    AllZero,

    #[error("invalid trial count: {0}")]
    InvalidTrials(u64),

    #[error("invalid search configuration: {0}")]
    InvalidSearch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
