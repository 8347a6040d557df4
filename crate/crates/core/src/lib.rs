//! Minimum-energy design of a wireless-powered integrated radar and
//! communication (IRC) transmitter.
//!
//! A multi-antenna power station charges a single-antenna OFDM transmitter
//! for `tau1` seconds (harvest phase); the transmitter then spends the
//! harvested energy over `tau2` seconds on a waveform that must reach a
//! radar mutual-information floor and a communication rate floor. The
//! crate computes the allocation (energy beamformer, time split,
//! per-subcarrier energies) that minimizes the power station's energy and
//! checks every answer with an explicit optimality certificate.
//!
//! Modules:
//! - [`model`]: domain types and pure evaluators (harvested energy, MI, rate,
//!   constraint report, OFDM synthesis).
//! - [`solver`]: the optimal allocation (two-multiplier water-filling inside a
//!   time-split search, maximum-ratio energy beamforming).
//! - [`certify`]: KKT certificate, rank-one beam extraction, grid oracle.
//! - [`benchmark`]: the equal-power baseline and feasibility frontiers.
//! - [`sim`]: random channels, Monte-Carlo sweeps and CSV output.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod certify;
mod error;
mod linalg;
pub mod model;
mod roots;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64;
