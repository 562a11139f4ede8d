//! Simulation and analysis of spin-wave photon-echo quantum memories in
//! inhomogeneously broadened rare-earth ensembles.
//!
//! The crate is organised by physical subsystem:
//!
//! - [`spectral`]: detuning distributions, pulse envelopes, two-level propagation
//! - [`holeburn`]: rate-equation spectral preparation
//! - [`echosim`]: schedules, dynamical decoupling and Monte Carlo echo simulation
//! - [`model`]: closed-form efficiency model and least-squares fits
//! - [`photonics`]: photon statistics, time-bin fidelities, classical bounds
//! - [`rffield`]: quasi-static fields of planar electrode layouts
//!
//! All frequencies are in Hz, times in seconds, powers in W. Angular Rabi
//! frequencies (rad/s) are marked as such.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod echosim;
pub mod error;
pub mod holeburn;
pub mod io;
pub mod model;
pub mod par;
pub mod photonics;
mod quad;
pub mod rffield;
pub mod spectral;

pub use error::{Error, Result};
