//! Finite-state channels under compound uncertainty: causal conditioning,
//! directed information, capacity, code-trees, universal decoding and
//! simulation.

pub mod capacity;
pub mod causal;
pub mod channel;
pub mod codetree;
pub mod decoder;
pub mod directed;
pub mod error;
pub mod math;
pub mod presets;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
