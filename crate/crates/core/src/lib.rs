//! Federated face anti-spoofing simulator.
//!
//! Data centers train a binary real/spoof classifier locally on private
//! data, a server averages the returned parameter vectors round after round,
//! and users evaluate the downloaded global model on a domain that never took
//! part in training. Alongside the federated protocol the crate provides the
//! usual comparison baselines (single-center, score fusion, pooled data), a
//! synthetic multi-domain data generator, the HTER/EER/AUC metrics and an
//! experiment harness that ties them together.

pub mod data;
pub mod error;
pub mod federation;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
