//! Digital-twin capacity optimization for an EDFA-amplified WDM link.
//!
//! The crate bundles five pieces:
//!
//! - [`link_sim`]: a parametric ground-truth simulator of a 12-span
//!   amplifier chain with homogeneous gain saturation, per-channel ASE, and
//!   removable gain-flattening filters, calibrated against a committed
//!   operating-point table.
//! - [`profile_gen`]: random launch-profile generation by smoothed random
//!   walks with relative-entropy diversity selection and excursion
//!   rescaling.
//! - [`metrics`]: capacity, SNR-combination, and power-efficiency formulas,
//!   plus OSA-style SNR estimation.
//! - [`surrogate`]: the feed-forward twin (40 -> 80 -> 120 -> 80) trained
//!   with Adam + L2 on mean absolute error in the log-power domain.
//! - [`optimizer`]: projected finite-difference gradient ascent on the twin
//!   with per-iteration smoothing, against iterative and analytic
//!   waterfilling baselines.

pub mod error;
pub mod grid;
pub mod io;
pub mod link_sim;
pub mod metrics;
pub mod optimizer;
pub mod profile_gen;
pub mod surrogate;
pub mod units;

pub use error::{Error, Result};

/// Crate version, stamped into manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
