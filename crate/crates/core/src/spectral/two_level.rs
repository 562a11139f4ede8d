use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Pulse, PulseShape, SpectralDistribution};
use crate::error::{ensure_finite, Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Element of SU(2) in the `(|g>, |e>)` basis, stored as its first column:
/// `[[a, -conj(b)], [b, conj(a)]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2 {
    pub a: Complex64,
    pub b: Complex64,
}

impl Su2 {
    pub const IDENTITY: Su2 = Su2 { a: Complex64 { re: 1.0, im: 0.0 }, b: Complex64 { re: 0.0, im: 0.0 } };

    /// Rotation by `angle` about the equatorial axis at azimuth `phase`.
    pub fn rotation(angle: f64, phase: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Su2 { a: Complex64::new(c, 0.0), b: -I * s * Complex64::from_polar(1.0, phase) }
    }

    /// Free precession for `time` at detuning `detuning` (Hz), with the same
    /// sign convention as the pulse Hamiltonian: `rho_eg` picks up
    /// `exp(-i 2 pi detuning time)`.
    pub fn precession(detuning: f64, time: f64) -> Self {
        Su2 { a: Complex64::from_polar(1.0, PI * detuning * time), b: Complex64::new(0.0, 0.0) }
    }

    /// Matrix product `self · rhs` (apply `rhs` first).
    pub fn then_after(self, rhs: Su2) -> Su2 {
        Su2 { a: self.a * rhs.a - self.b.conj() * rhs.b, b: self.b * rhs.a + self.a.conj() * rhs.b }
    }

    /// Compose: apply `self`, then `next`.
    pub fn then(self, next: Su2) -> Su2 {
        next.then_after(self)
    }

    /// `|<g|U|g>|^2 + |<e|U|g>|^2`; equals one for an exact unitary.
    pub fn norm_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    /// `<g|U|g>`
    pub fn gg(&self) -> Complex64 {
        self.a
    }
    /// `<e|U|g>`
    pub fn eg(&self) -> Complex64 {
        self.b
    }
    /// `<e|U|e>`
    pub fn ee(&self) -> Complex64 {
        self.a.conj()
    }
    /// `<g|U|e>`
    pub fn ge(&self) -> Complex64 {
        -self.b.conj()
    }

    /// Ground→excited transfer probability.
    pub fn transfer(&self) -> f64 {
        self.b.norm_sqr()
    }
}

/// Density-matrix description of a two-level system: excited population and
/// the coherence `rho_eg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelState {
    pub population_excited: f64,
    pub coherence: Complex64,
}

impl TwoLevelState {
    pub const GROUND: TwoLevelState =
        TwoLevelState { population_excited: 0.0, coherence: Complex64 { re: 0.0, im: 0.0 } };

    pub fn bloch_norm(&self) -> f64 {
        let w = 2.0 * self.population_excited - 1.0;
        (4.0 * self.coherence.norm_sqr() + w * w).sqrt()
    }

    pub fn apply(&self, u: &Su2) -> TwoLevelState {
        let p = self.population_excited;
        let c = self.coherence;
        // rho = [[1-p, c*], [c, p]]
        let m = [[u.gg(), u.ge()], [u.eg(), u.ee()]];
        let rho = [[Complex64::new(1.0 - p, 0.0), c.conj()], [c, Complex64::new(p, 0.0)]];
        let mut tmp = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                tmp[i][j] = m[i][0] * rho[0][j] + m[i][1] * rho[1][j];
            }
        }
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = tmp[i][0] * m[j][0].conj() + tmp[i][1] * m[j][1].conj();
            }
        }
        TwoLevelState { population_excited: out[1][1].re, coherence: out[1][0] }
    }
}

/// Propagator of `pulse` for an emitter at `detuning` (Hz from the carrier
/// reference). Square pulses use the closed form; swept pulses are integrated.
pub fn pulse_propagator(pulse: &Pulse, detuning: f64) -> Result<Su2> {
    pulse.validate()?;
    ensure_finite("detuning", detuning)?;
    Ok(match pulse.shape {
        PulseShape::Square => square_propagator(pulse, detuning),
        PulseShape::Chs { .. } => integrate_propagator_unchecked(pulse, detuning),
    })
}

fn square_propagator(pulse: &Pulse, detuning: f64) -> Su2 {
    let delta = 2.0 * PI * (detuning - pulse.carrier_detuning);
    let omega = pulse.peak_rabi;
    let w = omega.hypot(delta);
    if w == 0.0 {
        return Su2::IDENTITY;
    }
    let (s, c) = (0.5 * w * pulse.duration).sin_cos();
    Su2 { a: Complex64::new(c, s * delta / w), b: -I * s * (omega / w) * Complex64::from_polar(1.0, pulse.phase) }
}

/// Fixed-step RK4 integration of the Schrödinger equation for any pulse
/// shape, with step at most `1 / (200 · max rate)`.
pub fn integrate_propagator(pulse: &Pulse, detuning: f64) -> Result<Su2> {
    pulse.validate()?;
    ensure_finite("detuning", detuning)?;
    Ok(integrate_propagator_unchecked(pulse, detuning))
}

fn integrate_propagator_unchecked(pulse: &Pulse, detuning: f64) -> Su2 {
    let rate = pulse.max_rate(detuning).max(1.0 / pulse.duration);
    let steps = ((pulse.duration * rate * 200.0).ceil() as usize).max(16);
    let h = pulse.duration / steps as f64;
    let phase = Complex64::from_polar(1.0, pulse.phase);
    // i d/dt (cg, ce) = H (cg, ce), H = 1/2 [[-D, W e^{-i phi}], [W e^{i phi}, D]]
    let deriv = |t: f64, y: [Complex64; 2]| -> [Complex64; 2] {
        let om = pulse.rabi_at(t);
        let d = 2.0 * PI * (detuning - pulse.carrier_detuning - pulse.sweep_at(t));
        let hg = 0.5 * (-d * y[0] + om * phase.conj() * y[1]);
        let he = 0.5 * (om * phase * y[0] + d * y[1]);
        [-I * hg, -I * he]
    };
    let mut y = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = deriv(t, y);
        let k2 = deriv(t + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = deriv(t + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = deriv(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for j in 0..2 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    Su2 { a: y[0], b: y[1] }
}

/// Evolves `initial` through `pulse` for an emitter at `detuning` (Hz).
pub fn propagate_two_level(pulse: &Pulse, detuning: f64, initial: &TwoLevelState) -> Result<TwoLevelState> {
    ensure_finite("population_excited", initial.population_excited)?;
    ensure_finite("coherence", initial.coherence.re + initial.coherence.im)?;
    let u = pulse_propagator(pulse, detuning)?;
    Ok(initial.apply(&u))
}

/// Frequency band `[lo, hi]` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn centered(width: f64) -> Self {
        Self { lo: -0.5 * width, hi: 0.5 * width }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Density-weighted mean ground→excited transfer of `pulse` over `band`.
///
/// Uses composite Simpson quadrature on `points` nodes (odd, at least 3).
/// A zero-width band evaluates the transfer at that single detuning.
pub fn transfer_efficiency_with(pulse: &Pulse, dist: &SpectralDistribution, band: Band, points: usize) -> Result<f64> {
    pulse.validate()?;
    dist.validate()?;
    ensure_finite("band.lo", band.lo)?;
    ensure_finite("band.hi", band.hi)?;
    if band.hi < band.lo {
        return Err(Error::domain("empty band: hi < lo"));
    }
    if band.width() == 0.0 {
        return Ok(pulse_propagator(pulse, band.lo)?.transfer());
    }
    if dist.is_degenerate() {
        return if band.contains(dist.center) {
            Ok(pulse_propagator(pulse, dist.center)?.transfer())
        } else {
            Err(Error::domain("band holds no probability mass"))
        };
    }
    let n = points.max(3) | 1;
    let h = band.width() / (n - 1) as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        let x = band.lo + i as f64 * h;
        let w = if i == 0 || i == n - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let p = dist.pdf(x)?;
        num += w * p * pulse_propagator(pulse, x)?.transfer();
        den += w * p;
    }
    if den <= 0.0 {
        return Err(Error::domain("band holds no probability mass"));
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// [`transfer_efficiency_with`] on 121 nodes.
pub fn transfer_efficiency(pulse: &Pulse, dist: &SpectralDistribution, band: Band) -> Result<f64> {
    transfer_efficiency_with(pulse, dist, band, 121)
}
