//! Capacity prediction, scenario construction and robust ground holding.

pub mod capacity;
pub mod distributions;
pub mod error;
pub mod maghp;
pub mod predictor;
pub mod schedule;
pub mod sensitivity;

pub use error::{Error, Result};
