//! Anisotropic Gaussian smoothing for gradient-based optimization.

pub mod adaptation;
pub mod bounds;
pub mod error;
pub mod linalg;
pub mod objectives;
pub mod optimizers;
pub mod par;
pub mod rng;
pub mod smoothing;

pub use error::{Error, Result};
