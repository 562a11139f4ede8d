//! Spectral distributions, pulse envelopes and two-level propagation.

mod distribution;
mod pulse;
mod two_level;

pub(crate) use distribution::lorentz_pdf;
pub use distribution::{chunk_rng, fwhm_per_sigma, LineShape, SpectralDistribution, VoigtJet, SAMPLE_CHUNK};
pub use pulse::{calibration_from_anchor, power_for_rabi, rabi_from_power, Pulse, PulseShape, DEFAULT_CHS_TRUNCATION};
pub use two_level::{
    integrate_propagator, propagate_two_level, pulse_propagator, transfer_efficiency, transfer_efficiency_with, Band,
    Su2, TwoLevelState,
};
