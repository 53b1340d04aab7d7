//! Lane-change interactive pattern mining.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`ingest`] parses and canonicalizes drone-recorded trajectories.
//! 2. [`extract`] finds three-vehicle lane-change scenarios (ego, preceding
//!    vehicle in the original lane, vehicle in the target lane).
//! 3. [`hmm`] fits a Gaussian hidden Markov model per scenario and cuts it
//!    into driving primitives.
//! 4. [`prep`] and [`cluster`] bring primitives to a common length and scale
//!    and group them with DTW K-means.
//! 5. [`risk`] scores primitives and clusters by time-to-collision.
//!
//! [`pipeline`] wires the stages together with on-disk caching.

pub mod cluster;
pub mod config;
pub mod error;
pub mod extract;
pub mod hmm;
pub mod ingest;
pub mod kmeans;
mod par;
pub mod pipeline;
pub mod prep;
pub mod risk;
pub mod scenario;

pub use error::{Error, Result};
pub use scenario::{Scenario, SCENARIO_DIM};
