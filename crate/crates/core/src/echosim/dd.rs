use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::spectral::{pulse_propagator, Pulse, SpectralDistribution, Su2};

/// Rotation axis of a decoupling pulse in the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DdAxis {
    X,
    Y,
}

impl DdAxis {
    pub fn phase(self) -> f64 {
        match self {
            DdAxis::X => 0.0,
            DdAxis::Y => FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdPulse {
    pub axis: DdAxis,
    /// Center of the pulse, seconds from the start of the block.
    pub offset: f64,
}

/// A train of spin pi pulses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdSequence {
    pub pulses: Vec<DdPulse>,
    /// Shape used when pulses are propagated at finite duration; its
    /// `duration` also sets how much time each pulse occupies.
    pub template: Pulse,
    /// Length of the block, seconds.
    pub duration: f64,
    /// Propagate the template shape instead of instantaneous rotations.
    #[serde(default)]
    pub finite_pulses: bool,
}

impl DdSequence {
    /// `tau - pi - 2tau - pi - ... - tau` over `duration`.
    pub fn equally_spaced(axes: &[DdAxis], duration: f64, template: Pulse) -> Self {
        let n = axes.len() as f64;
        let pulses = axes
            .iter()
            .enumerate()
            .map(|(k, &axis)| DdPulse { axis, offset: (2 * k + 1) as f64 * duration / (2.0 * n) })
            .collect();
        Self { pulses, template, duration, finite_pulses: false }
    }

    pub fn xx(duration: f64, template: Pulse) -> Self {
        Self::equally_spaced(&[DdAxis::X, DdAxis::X], duration, template)
    }

    pub fn xxxx(duration: f64, template: Pulse) -> Self {
        Self::equally_spaced(&[DdAxis::X; 4], duration, template)
    }

    pub fn xy4(duration: f64, template: Pulse) -> Self {
        Self::equally_spaced(&[DdAxis::X, DdAxis::Y, DdAxis::X, DdAxis::Y], duration, template)
    }

    /// The same sequence repeated `n` times back to back.
    pub fn repeated(&self, n: usize) -> Self {
        let mut pulses = Vec::with_capacity(self.pulses.len() * n);
        for r in 0..n {
            pulses.extend(
                self.pulses.iter().map(|p| DdPulse { axis: p.axis, offset: p.offset + r as f64 * self.duration }),
            );
        }
        Self { pulses, template: self.template, duration: self.duration * n as f64, finite_pulses: self.finite_pulses }
    }

    /// Offsets rescaled so the block spans `duration`.
    pub fn stretched_to(&self, duration: f64) -> Self {
        let k = duration / self.duration;
        let mut out = self.clone();
        for p in &mut out.pulses {
            p.offset *= k;
        }
        out.duration = duration;
        out
    }

    pub fn with_finite_pulses(mut self, on: bool) -> Self {
        self.finite_pulses = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.template.validate()?;
        ensure_finite("dd.duration", self.duration)?;
        if self.pulses.is_empty() {
            return Err(Error::Schedule("decoupling block has no pulses".into()));
        }
        if !self.pulses.len().is_multiple_of(2) {
            return Err(Error::Schedule("decoupling block needs an even number of pulses".into()));
        }
        let half = 0.5 * self.template.duration;
        let mut prev_end = 0.0;
        for p in &self.pulses {
            ensure_finite("dd.offset", p.offset)?;
            if p.offset - half < prev_end - 1e-15 * self.duration {
                return Err(Error::Schedule("decoupling pulses overlap or leave the block".into()));
            }
            prev_end = p.offset + half;
        }
        if prev_end > self.duration * (1.0 + 1e-12) {
            return Err(Error::Schedule("decoupling pulses extend past the block".into()));
        }
        Ok(())
    }

    /// Propagator of the whole block for one ion, followed by free
    /// precession until `total` (the block starts at zero).
    pub(crate) fn propagate(&self, detuning: f64, angle_error: f64, scale: f64, total: f64) -> Result<Su2> {
        let mut u = Su2::IDENTITY;
        let mut t = 0.0;
        for p in &self.pulses {
            if self.finite_pulses {
                let start = p.offset - 0.5 * self.template.duration;
                u = u.then(Su2::precession(detuning, start - t));
                let mut pulse = self.template;
                pulse.phase += p.axis.phase();
                pulse.peak_rabi *= scale * (PI + angle_error) / PI;
                u = u.then(pulse_propagator(&pulse, detuning)?);
                t = start + self.template.duration;
            } else {
                u = u.then(Su2::precession(detuning, p.offset - t));
                u = u.then(Su2::rotation((PI + angle_error) * scale, p.axis.phase() + self.template.phase));
                t = p.offset;
            }
        }
        Ok(u.then(Su2::precession(detuning, total - t)))
    }
}

/// Imperfections of the decoupling pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseErrorModel {
    /// Systematic rotation-angle offset per pi pulse, radians.
    #[serde(default)]
    pub angle_error: f64,
    /// Static spin detunings, Hz.
    #[serde(default = "SpectralDistribution::delta")]
    pub detuning_spread: SpectralDistribution,
    /// Per-ion multiplicative drive amplitude; centered at one.
    #[serde(default = "unit_scale")]
    pub angle_scale: SpectralDistribution,
}

fn unit_scale() -> SpectralDistribution {
    SpectralDistribution::delta().centered_at(1.0)
}

impl Default for PulseErrorModel {
    fn default() -> Self {
        Self { angle_error: 0.0, detuning_spread: SpectralDistribution::delta(), angle_scale: unit_scale() }
    }
}

impl PulseErrorModel {
    pub fn with_angle_error(angle_error: f64) -> Self {
        Self { angle_error, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("angle_error", self.angle_error)?;
        if !(self.angle_error > -PI && self.angle_error < PI) {
            return Err(Error::domain("angle error must lie in (-pi, pi)"));
        }
        self.detuning_spread.validate()?;
        self.angle_scale.validate()
    }
}
