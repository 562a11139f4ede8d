//! Photon statistics, time-bin qubit readout and storage fidelities.

mod bound;
mod counts;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

pub use bound::{classical_bound, ClassicalBound};
pub use counts::{
    expected_signal, measured_fidelity, simulate_counts, Analysis, CountHistogram, InputState, TimeBinQubit,
    DEFAULT_DETECTION_WINDOW,
};

/// Poisson probability `e^{-mu} mu^n / n!`, evaluated in log space.
pub fn poisson_pmf(mu: f64, n: u64) -> Result<f64> {
    ensure_finite("mu", mu)?;
    if mu < 0.0 {
        return Err(Error::domain("mean photon number must be non-negative"));
    }
    if mu == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let n = n as f64;
    Ok((n * mu.ln() - mu - libm::lgamma(n + 1.0)).exp())
}

/// Storage channel seen by a stored photon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryChannel {
    /// Memory efficiency.
    pub eta_m: f64,
    /// Unconditional noise probability per detection window.
    pub p_n: f64,
    /// Classical (noise-free) fidelity.
    #[serde(default = "one")]
    pub f_c: f64,
}

fn one() -> f64 {
    1.0
}

impl MemoryChannel {
    pub fn new(eta_m: f64, p_n: f64) -> Self {
        Self { eta_m, p_n, f_c: 1.0 }
    }

    pub fn with_classical_fidelity(mut self, f_c: f64) -> Self {
        self.f_c = f_c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta_m", self.eta_m), ("p_n", self.p_n), ("f_c", self.f_c)] {
            ensure_finite(name, v)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Signal-to-noise ratio; noise-free channels saturate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Snr {
    Finite(f64),
    Saturated,
}

impl Snr {
    pub fn value(&self) -> f64 {
        match self {
            Snr::Finite(v) => *v,
            Snr::Saturated => f64::INFINITY,
        }
    }
}

/// `mu * eta_m / p_n`.
pub fn snr(mu: f64, eta_m: f64, p_n: f64) -> Result<Snr> {
    MemoryChannel::new(eta_m, p_n).validate()?;
    ensure_finite("mu", mu)?;
    if mu < 0.0 {
        return Err(Error::domain("mean photon number must be non-negative"));
    }
    if p_n == 0.0 {
        return Ok(Snr::Saturated);
    }
    Ok(Snr::Finite(mu * eta_m / p_n))
}

/// Projection fidelity `N+ / (N+ + N-)`.
pub fn fidelity_from_counts(n_plus: u64, n_minus: u64) -> Result<f64> {
    let total = n_plus + n_minus;
    if total == 0 {
        return Err(Error::UndefinedFidelity);
    }
    Ok(n_plus as f64 / total as f64)
}

/// Expected fidelity of a weak coherent input with mean photon number
/// `mu_q` stored in `channel`, with noise spread over both projections.
pub fn theoretical_fidelity(mu_q: f64, channel: &MemoryChannel) -> Result<f64> {
    channel.validate()?;
    ensure_finite("mu_q", mu_q)?;
    let signal = mu_q * channel.eta_m;
    if !(signal > 0.0) {
        return Err(Error::domain("mu_q * eta_m must be positive"));
    }
    let r = channel.p_n / signal;
    Ok((channel.f_c + r) / (1.0 + 2.0 * r))
}

/// Average over the four input states, basis states weighted 1/3 and
/// superpositions 2/3.
pub fn total_fidelity(f_e: f64, f_l: f64, f_plus: f64, f_plus_i: f64) -> Result<f64> {
    for (name, v) in [("f_e", f_e), ("f_l", f_l), ("f_plus", f_plus), ("f_plus_i", f_plus_i)] {
        ensure_finite(name, v)?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("{name} must lie in [0, 1]")));
        }
    }
    Ok((f_e + f_l) / 6.0 + (f_plus + f_plus_i) / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Quantum,
    Classical,
}

/// Per-state and total fidelities compared with the classical bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub mu_q: f64,
    pub f_e: f64,
    pub f_l: f64,
    pub f_plus: f64,
    pub f_plus_i: f64,
    pub f_total: f64,
    pub f_theory: f64,
    pub classical_bound: f64,
    pub n_min: u32,
    pub verdict: Verdict,
}

impl FidelityReport {
    pub fn new(mu_q: f64, channel: &MemoryChannel, per_state: [f64; 4]) -> Result<Self> {
        let [f_e, f_l, f_plus, f_plus_i] = per_state;
        let f_total = total_fidelity(f_e, f_l, f_plus, f_plus_i)?;
        let f_theory = theoretical_fidelity(mu_q, channel)?;
        let bound = classical_bound(mu_q, channel.eta_m)?;
        let verdict = if f_total > bound.bound { Verdict::Quantum } else { Verdict::Classical };
        Ok(Self {
            mu_q,
            f_e,
            f_l,
            f_plus,
            f_plus_i,
            f_total,
            f_theory,
            classical_bound: bound.bound,
            n_min: bound.n_min,
            verdict,
        })
    }
}
