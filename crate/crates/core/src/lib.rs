//! Link-level OFDM simulation library.
//!
//! Simulates a multipath Rayleigh block-fading downlink with path loss and
//! inter-user interference, and benchmarks four receivers over it:
//!
//! - matched-filter detection with **LS** channel estimation,
//! - matched-filter detection with **MMSE** (Wiener) channel estimation,
//! - an **MLP** joint detector-estimator trained offline,
//! - a per-subcarrier **ELM** joint detector-estimator trained in closed
//!   form each coherence block.
//!
//! The crate is organized bottom-up:
//!
//! - [`numerics`]: complex vectors/matrices, unitary DFT/IDFT, convolution,
//!   SVD pseudoinverse, least squares, LU solve, seeded RNG streams.
//! - [`modem`]: M-QAM mapping, OFDM frame assembly with cyclic prefix,
//!   pilot patterns.
//! - [`channel`]: tapped-delay Rayleigh fading, path loss, AWGN, user
//!   placement.
//! - [`estimators`]: LS and MMSE pilot-based channel estimation, one-tap
//!   equalization, NMSE metric.
//! - [`neural`]: from-scratch MLP with backprop and Adam, checkpointing.
//! - [`elm`]: per-subcarrier extreme learning machine bank.
//! - [`allocation`]: per-subcarrier SINR and greedy subcarrier selection.
//! - [`harness`]: experiment configs, Monte Carlo campaigns, operation
//!   counting, timing, CSV metrics and SVG plots.

pub mod allocation;
pub mod channel;
pub mod elm;
pub mod error;
pub mod estimators;
pub mod flops;
pub mod harness;
pub mod modem;
pub mod neural;
pub mod numerics;

pub use error::{Error, Result};
pub use flops::FlopCounter;
pub use harness::config::ExperimentConfig;
pub use harness::metrics::MetricRecord;
pub use numerics::{CMat, Complex64, RMat, RngStream};
