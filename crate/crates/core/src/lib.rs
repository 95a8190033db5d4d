//! Energy-aware UAV routing under time-varying wind.

pub mod dubins;
pub mod energy;
pub mod error;
pub mod executor;
pub mod fleet;
pub mod graph;
pub mod harness;
pub mod planner;
pub mod trajectory;
pub mod wind;

pub use error::{Error, Result};
