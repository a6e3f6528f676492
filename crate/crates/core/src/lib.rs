//! Simulation toolkit for analog signal processing with low-barrier-magnet
//! stochastic neurons.
//!
//! - [`device`]: analog and binary stochastic neuron models, magnet retention.
//! - [`synapse`]: signed weights as differential conductance pairs.
//! - [`reservoir`]: the stochastic leaky reservoir and its execution modes.
//! - [`training`]: ridge readout training, NRMSE and symbol recovery rate.
//! - [`tasks`]: Mackey-Glass generation and nonlinear channel equalization.
//! - [`cli`]: the `magres` command-line driver.

pub mod cli;
pub mod config;
pub mod device;
pub mod error;
pub mod linalg;
pub mod manifest;
pub mod matrix_io;
pub mod numfmt;
pub mod reservoir;
pub mod rng;
pub mod synapse;
pub mod tasks;
pub mod training;

pub use error::{Error, Result};
pub use rng::RngState;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
