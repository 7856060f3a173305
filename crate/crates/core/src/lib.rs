//! Ergodicity diagnostics for Markov chains: exact and Monte Carlo laws,
//! probability metrics, couplings and the example models.

pub mod coupling;
pub mod diagnostics;
pub mod distances;
pub mod error;
pub mod markov;
pub mod metric;
pub mod models;
pub mod reproduce;
pub mod state;
pub mod stats;

pub use error::{Error, Result};
pub use state::State;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
