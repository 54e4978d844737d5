//! Columnar agent-based simulation engine.
//!
//! All agent state lives in a [`Population`]: one contiguous typed column
//! per attribute, an alive mask, and stable sequential agent IDs. On top of
//! that core the crate provides a per-agent facade ([`agent::AgentView`]),
//! grid / continuous-space / network environments with a KD-tree spatial
//! index, a deterministic splitmix64 [`Rng`] with a documented draw-order
//! contract, a step-loop model runtime, parameter-sweep experiment
//! execution, and calibration strategies up to Gaussian-process Bayesian
//! optimization.
//!
//! The `parallel` feature (on by default) lets vectorized column updates and
//! experiment sweeps fan out across threads via rayon; disabling it compiles
//! sequential fallbacks with identical results.

pub mod agent;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod index;
pub mod metrics;
pub mod model;
pub mod network;
pub mod optimize;
pub mod params;
pub mod population;
pub mod rng;
pub mod space;
pub mod value;

pub use error::{Result, SimError};
pub use population::{AggregateKind, Column, Population};
pub use rng::Rng;
pub use value::{AgentId, AttributeType, Value};
