//! Pipeline driver: synthetic data, capacity estimation, predictor training
//! and forecasting, ground holding solves and sensitivity sweeps.

pub mod commands;
pub mod config;
pub mod error;
pub mod synth;

pub use config::{PipelineConfig, Resolved};
pub use error::CliError;
