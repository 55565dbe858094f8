//! Achievable-rate simulation of expanded compute-and-forward in cell-free
//! massive MIMO uplinks.

pub mod baselines;
pub mod coeff;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod hungarian;
pub mod linalg;
pub mod power;
pub mod rate;
pub mod rng;
pub mod schemes;
pub mod selection;
pub mod successive;

pub use error::{Error, Result};
