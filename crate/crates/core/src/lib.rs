//! Deterministic benchmark core for studying domain shift in learned
//! collision avoidance.
//!
//! The crate is organized around a fixed pipeline:
//!
//! - [`sim`] — planar world model, unicycle kinematics, collision tests, and
//!   the closed-loop episode runner.
//! - [`procgen`] — seeded generation of the three basic training environment
//!   families (canyon, forest, sandbox) and the fixed held-out validation
//!   corridor.
//! - [`render`] — column raycast renderer producing the grayscale policy
//!   observation, per-ray ground-truth depth, and the downsampled depth
//!   training target.
//! - [`expert`] — ground-truth-depth heuristic pilot used to collect
//!   demonstrations and label avoidance directions.
//! - [`data`] — demonstration collection, bit-exact dataset serialization,
//!   frame stacking, and the synthetic almost-collision set.
//! - [`nn`] — minimal tensor/layer library with exact-gradient
//!   backpropagation, optimizers, gradient checking, and model serialization.
//! - [`policy`] — NAUX/AUXD architecture builders, the behavioral-cloning
//!   trainer, and inference-time control.
//! - [`bench`] — online distance evaluation, population ranking, top-k
//!   tables, percentile curves, almost-collision classification, and report
//!   emission.
//!
//! Everything is a pure function of explicit seeds: re-running any stage with
//! the same inputs reproduces its outputs byte for byte.

pub mod bench;
pub mod data;
pub mod error;
pub mod expert;
pub mod nn;
pub mod policy;
pub mod procgen;
pub mod render;
pub mod rng;
pub mod sim;
pub mod util;

pub use error::{Error, Result};
