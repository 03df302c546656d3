//! Configuration, execution and verification for adaptive Gaussian smoothing runs.

pub mod config;
pub mod error;
pub mod experiment;
pub mod verify;

pub use config::{parse_config, ExperimentConfig};
pub use error::{FieldError, HarnessError};
