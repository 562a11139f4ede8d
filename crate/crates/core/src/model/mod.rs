//! Closed-form echo efficiency model and curve fitting.

mod fit;
mod lm;

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

pub use fit::{
    fit_decay, fit_rabi_nutation, fit_voigt, DecayModel, FitModel, FitParam, FitResult, Sample, DEFAULT_RESTARTS,
};

/// Parameters of the closed-form efficiency. Rates are in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlpeParams {
    /// Optical depth of the storage feature.
    pub d: f64,
    /// Mean transfer efficiency of one optical rephasing pulse.
    pub eta_control: f64,
    /// Spin (ground hyperfine) inhomogeneous FWHM.
    pub gamma13: f64,
    /// Excited hyperfine inhomogeneous FWHM.
    pub gamma35: f64,
    /// Effective optical decoherence rate.
    pub gamma: f64,
}

impl NlpeParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("d", self.d),
            ("eta_control", self.eta_control),
            ("gamma13", self.gamma13),
            ("gamma35", self.gamma35),
            ("gamma", self.gamma),
        ] {
            ensure_finite(name, v)?;
            if v < 0.0 {
                return Err(Error::domain(format!("{name} must be non-negative")));
            }
        }
        if self.eta_control > 1.0 {
            return Err(Error::domain("eta_control must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Zero-time efficiency `d^2 e^-d eta_control^4`.
    pub fn peak(&self) -> f64 {
        absorption_factor(self.d) * self.eta_control.powi(4)
    }
}

/// `d^2 e^{-d}`, the re-emission factor of the echo. At most `4 e^-2`.
pub fn absorption_factor(d: f64) -> f64 {
    d * d * (-d).exp()
}

/// Denominator `2 ln 2 / pi^2` that turns a FWHM into a Gaussian decay.
pub fn gaussian_width_constant() -> f64 {
    2.0 * LN_2 / (PI * PI)
}

/// `|<exp(i 2 pi s t)>|^2` for Gaussian detunings of FWHM `fwhm`.
pub fn gaussian_dephasing(fwhm: f64, t: f64) -> f64 {
    (-(fwhm * t).powi(2) / gaussian_width_constant()).exp()
}

/// Storage efficiency after spin-side interval `t31` and excited-side
/// interval `t42`.
pub fn nlpe_efficiency(p: &NlpeParams, t31: f64, t42: f64) -> Result<f64> {
    p.validate()?;
    ensure_finite("t31", t31)?;
    ensure_finite("t42", t42)?;
    if t31 < 0.0 || t42 < 0.0 {
        return Err(Error::domain("intervals must be non-negative"));
    }
    Ok(p.peak()
        * gaussian_dephasing(p.gamma13, t31)
        * gaussian_dephasing(p.gamma35, t42)
        * (-2.0 * p.gamma * t42).exp())
}

/// Which interval is swept when quoting a lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    T31,
    T42,
}

/// Time at which the efficiency falls to `1/e` of its zero-time value along
/// `axis`, with the other interval held at zero. With `dd_exponential` set
/// the decay is a pure exponential of that 1/e time.
pub fn lifetime_1e(p: &NlpeParams, axis: Axis, dd_exponential: Option<f64>) -> Result<f64> {
    if let Some(t) = dd_exponential {
        ensure_finite("dd_exponential", t)?;
        if !(t > 0.0) {
            return Err(Error::domain("exponential lifetime must be positive"));
        }
        return Ok(t);
    }
    p.validate()?;
    let c = gaussian_width_constant();
    // ln(eta(t)/eta(0)) + 1, monotone decreasing in t
    let f = |t: f64| match axis {
        Axis::T31 => 1.0 - (p.gamma13 * t).powi(2) / c,
        Axis::T42 => 1.0 - (p.gamma35 * t).powi(2) / c - 2.0 * p.gamma * t,
    };
    let decaying = match axis {
        Axis::T31 => p.gamma13 > 0.0,
        Axis::T42 => p.gamma35 > 0.0 || p.gamma > 0.0,
    };
    if !decaying {
        return Err(Error::NoRoot("efficiency does not decay along this axis".into()));
    }
    let mut hi = 1e-12;
    while f(hi) > 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoRoot("no 1/e crossing".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
