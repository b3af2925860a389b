//! Scores categorical samples against population benchmark distributions.

pub mod benchmarks;
pub mod distributions;
pub mod error;
pub mod metrics;
pub mod montecarlo;
pub mod scorecard;
pub mod survey;

pub use error::{Error, Result};
