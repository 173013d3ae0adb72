//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input to {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("{got} payload bits do not fill {want} data positions")]
    BitCount { got: usize, want: usize },

    #[error("cyclic prefix of {cp} samples exceeds symbol length {symbol}")]
    CpTooLong { cp: usize, symbol: usize },

    #[error("unsupported modulation order {0} (expected 4, 16 or 32)")]
    UnsupportedModulation(usize),

    #[error("pilot value at subcarrier {0} is zero; LS division undefined")]
    ZeroPilot(usize),

    #[error("noise power must be positive, got {0}")]
    NonPositiveNoise(f64),

    #[error("singular system in {0}")]
    Singular(&'static str),

    #[error("subnet {0} used before training")]
    UntrainedSubnet(usize),

    #[error("cannot select {want} subcarriers from an allocation of {have}")]
    SelectionTooLarge { want: usize, have: usize },

    #[error("{users} users exceed the {capacity} supported by {subcarriers} subcarriers at {per_user} per user")]
    TooManyUsers {
        users: usize,
        capacity: usize,
        subcarriers: usize,
        per_user: usize,
    },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("non-finite gradient at {0}; aborting training")]
    NanGradient(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}
