//! Simulation and feasibility tools for creating and probing optomechanical
//! superpositions with a single photon in nested interferometers.
//!
//! The crate is organised bottom-up:
//!
//! - [`quantum`]: complex/coherent-state algebra, the analytic evolution of the
//!   mechanical mode while a photon sits in the cavity, and a truncated
//!   number-basis propagator used as an independent check.
//! - [`interferometer`]: beam-splitter algebra for the inner (dark-port) and
//!   outer (time-bin) interferometers, decoherence and fringe probabilities.
//! - [`arrival`]: arrival-time densities, the closed-form overall success
//!   probability and histogramming.
//! - [`device`]: device parameters, derived quantities, feasibility checks,
//!   delay lines and the decoherence-timescale catalog.
//! - [`montecarlo`]: a seeded, parallel, bit-reproducible detection laboratory
//!   with estimators that recover the analytic predictions.
//! - [`quad`]: adaptive Gauss-Kronrod quadrature used for cross-checks.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod arrival;
pub mod constants;
pub mod device;
pub mod error;
pub mod interferometer;
pub mod montecarlo;
pub mod quad;
pub mod quantum;
pub mod tolerances;

pub use error::{Error, Result};
pub use num_complex::Complex64;
