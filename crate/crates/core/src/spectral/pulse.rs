use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Envelope edge level used when a CHS pulse does not specify one.
pub const DEFAULT_CHS_TRUNCATION: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum PulseShape {
    Square,
    /// Complex hyperbolic secant: sech envelope with a tanh frequency sweep
    /// spanning `bandwidth` (Hz). `truncation` is the envelope level, relative
    /// to the peak, at both pulse edges.
    Chs {
        bandwidth: f64,
        #[serde(default = "default_truncation")]
        truncation: f64,
    },
}

fn default_truncation() -> f64 {
    DEFAULT_CHS_TRUNCATION
}

/// One driving-field segment. `peak_rabi` is angular (rad/s), `duration` in
/// seconds, `carrier_detuning` in Hz and `phase` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    #[serde(flatten)]
    pub shape: PulseShape,
    pub peak_rabi: f64,
    pub duration: f64,
    #[serde(default)]
    pub carrier_detuning: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Pulse {
    pub fn square(peak_rabi: f64, duration: f64) -> Self {
        Self { shape: PulseShape::Square, peak_rabi, duration, carrier_detuning: 0.0, phase: 0.0 }
    }

    /// Resonant square pulse of the given rotation angle.
    pub fn square_with_area(peak_rabi: f64, area: f64) -> Self {
        Self::square(peak_rabi, area / peak_rabi)
    }

    pub fn chs(peak_rabi: f64, bandwidth: f64, duration: f64) -> Self {
        Self {
            shape: PulseShape::Chs { bandwidth, truncation: DEFAULT_CHS_TRUNCATION },
            peak_rabi,
            duration,
            carrier_detuning: 0.0,
            phase: 0.0,
        }
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_truncation(mut self, truncation: f64) -> Self {
        if let PulseShape::Chs { truncation: t, .. } = &mut self.shape {
            *t = truncation;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("peak_rabi", self.peak_rabi)?;
        ensure_finite("duration", self.duration)?;
        ensure_finite("carrier_detuning", self.carrier_detuning)?;
        ensure_finite("phase", self.phase)?;
        if self.duration <= 0.0 {
            return Err(Error::domain("pulse duration must be positive"));
        }
        if self.peak_rabi < 0.0 {
            return Err(Error::domain("peak Rabi frequency must be non-negative"));
        }
        if let PulseShape::Chs { bandwidth, truncation } = self.shape {
            ensure_finite("chs_bandwidth", bandwidth)?;
            if bandwidth < 0.0 {
                return Err(Error::domain("CHS bandwidth must be non-negative"));
            }
            if !(truncation > 0.0 && truncation < 1.0) {
                return Err(Error::domain("CHS truncation must lie in (0, 1)"));
            }
        }
        Ok(())
    }

    /// Pulse area `∫ Ω(t) dt` in radians.
    pub fn area(&self) -> f64 {
        match self.shape {
            PulseShape::Square => self.peak_rabi * self.duration,
            PulseShape::Chs { .. } => {
                let beta = self.chs_beta();
                // ∫ sech = 2 atan(tanh(x/2)) evaluated symmetrically
                let half = beta * self.duration / 2.0;
                self.peak_rabi * 4.0 * (half / 2.0).tanh().atan() / beta
            }
        }
    }

    fn chs_beta(&self) -> f64 {
        match self.shape {
            PulseShape::Chs { truncation, .. } => 2.0 * (1.0 / truncation).acosh() / self.duration,
            PulseShape::Square => 0.0,
        }
    }

    /// Instantaneous Rabi frequency (rad/s) at time `t` into the pulse.
    pub fn rabi_at(&self, t: f64) -> f64 {
        match self.shape {
            PulseShape::Square => self.peak_rabi,
            PulseShape::Chs { .. } => {
                let x = self.chs_beta() * (t - self.duration / 2.0);
                self.peak_rabi / x.cosh()
            }
        }
    }

    /// Instantaneous field frequency offset (Hz) from the carrier.
    pub fn sweep_at(&self, t: f64) -> f64 {
        match self.shape {
            PulseShape::Square => 0.0,
            PulseShape::Chs { bandwidth, .. } => {
                let x = self.chs_beta() * (t - self.duration / 2.0);
                0.5 * bandwidth * x.tanh()
            }
        }
    }

    /// Largest angular rate in the Hamiltonian, used to size integration steps.
    pub(crate) fn max_rate(&self, detuning: f64) -> f64 {
        let sweep = match self.shape {
            PulseShape::Chs { bandwidth, .. } => bandwidth,
            PulseShape::Square => 0.0,
        };
        let det = (detuning - self.carrier_detuning).abs() + 0.5 * sweep;
        self.peak_rabi.max(2.0 * PI * sweep).max(2.0 * PI * det)
    }
}

/// Rabi frequency from drive power, `Ω = calibration · sqrt(P)`.
///
/// `calibration` is in Hz/√W, `power` in W.
pub fn rabi_from_power(power: f64, calibration: f64) -> Result<f64> {
    ensure_finite("power", power)?;
    ensure_finite("calibration", calibration)?;
    if power < 0.0 {
        return Err(Error::domain("power must be non-negative"));
    }
    Ok(calibration * power.sqrt())
}

/// Calibration constant that maps `power` to `rabi` under square-root scaling.
pub fn calibration_from_anchor(rabi: f64, power: f64) -> Result<f64> {
    if !(power > 0.0) || !rabi.is_finite() {
        return Err(Error::domain("anchor needs positive power and finite Rabi frequency"));
    }
    Ok(rabi / power.sqrt())
}

/// Power needed to reach `rabi` with the given calibration.
pub fn power_for_rabi(rabi: f64, calibration: f64) -> Result<f64> {
    if !(calibration > 0.0) || rabi < 0.0 {
        return Err(Error::domain("need positive calibration and non-negative Rabi frequency"));
    }
    Ok((rabi / calibration).powi(2))
}
