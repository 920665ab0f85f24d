//! Simulation and verification toolkit for one-dimensional continuous-time
//! random walks in random environment in Sinai's regime.
//!
//! The crate is organized bottom-up:
//!
//! - [`environment`] samples i.i.d. elliptic jump rates reproducibly per site.
//! - [`landscape`] turns rates into the potential and finds t-stable wells.
//! - [`walker`] simulates the walk exactly, event by event.
//! - [`oracle`] computes ruin probabilities, stationary laws and spectral gaps.
//! - [`experiments`] runs the quenched and annealed verification campaigns.

pub mod environment;
pub mod experiments;
pub mod error;
pub mod hexfloat;
pub mod landscape;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod walker;

pub use environment::{DistributionSpec, Environment, Family, Rates, Window};
pub use error::{Error, Result};
pub use landscape::{SampledFunction, StableLandscape, TimeScale};
