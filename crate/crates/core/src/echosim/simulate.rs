use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dd::{DdSequence, PulseErrorModel};
use super::schedule::ProtocolSchedule;
use crate::error::{ensure_finite, Error, Result};
use crate::io::{csv_table, fmt_f64};
use crate::model::absorption_factor;
use crate::par::{self, CompensatedSum, ComplexSum};
use crate::spectral::{SpectralDistribution, SAMPLE_CHUNK};

/// Points in the echo amplitude trace, spread over the detection window.
pub const TRACE_POINTS: usize = 41;

/// Ensemble and material parameters of the storage medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoMedium {
    /// Optical inhomogeneous detunings, Hz.
    pub optical: SpectralDistribution,
    /// Spin (ground hyperfine) detunings, Hz.
    pub spin: SpectralDistribution,
    /// Excited hyperfine detunings, Hz.
    pub excited: SpectralDistribution,
    /// Effective optical decoherence rate, Hz.
    #[serde(default)]
    pub optical_decoherence: f64,
    pub optical_depth: f64,
    #[serde(default = "one")]
    pub eta_control: f64,
}

fn one() -> f64 {
    1.0
}

impl EchoMedium {
    /// Medium with no inhomogeneity and no decoherence.
    pub fn ideal(optical_depth: f64, eta_control: f64) -> Self {
        Self {
            optical: SpectralDistribution::delta(),
            spin: SpectralDistribution::delta(),
            excited: SpectralDistribution::delta(),
            optical_decoherence: 0.0,
            optical_depth,
            eta_control,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optical.validate()?;
        self.spin.validate()?;
        self.excited.validate()?;
        for (name, v) in [
            ("optical_decoherence", self.optical_decoherence),
            ("optical_depth", self.optical_depth),
            ("eta_control", self.eta_control),
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
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub time: f64,
    pub re: f64,
    pub im: f64,
}

impl TracePoint {
    pub fn abs2(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

/// Factors that multiply into the echo efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoDiagnostics {
    /// `d^2 e^-d`
    pub absorption_factor: f64,
    /// `eta_control^4`
    pub control_factor: f64,
    /// `exp(-2 gamma t42)`
    pub decoherence_factor: f64,
    /// Ensemble coherence `|<e^{i phi} a>|^2` with all detunings active.
    pub ensemble_factor: f64,
    pub optical_dephasing: f64,
    pub spin_dephasing: f64,
    pub excited_dephasing: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoResult {
    pub efficiency: f64,
    pub echo_time: f64,
    /// Echo field amplitude normalized so `|a|^2` is the efficiency.
    pub amplitude_trace: Vec<TracePoint>,
    pub residual_spin_population: f64,
    pub diagnostics: EchoDiagnostics,
}

impl EchoResult {
    pub fn trace_csv(&self) -> String {
        csv_table(
            &["time_s", "re", "im", "abs2"],
            self.amplitude_trace.iter().map(|p| vec![fmt_f64(p.time), fmt_f64(p.re), fmt_f64(p.im), fmt_f64(p.abs2())]),
        )
    }
}

/// Independent stream seed for one random input of a run.
pub(crate) fn stream_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const TAG_OPTICAL: u64 = 1;
const TAG_SPIN: u64 = 2;
const TAG_EXCITED: u64 = 3;
const TAG_SCALE: u64 = 4;

fn phasor(cycles: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * PI * cycles)
}

/// Per-ion spin amplitude `U_ee U_gg*` of the decoupled storage interval
/// and the population left in the wrong level.
fn dd_amplitude(dd: &DdSequence, detuning: f64, angle_error: f64, scale: f64, total: f64) -> Result<(Complex64, f64)> {
    let u = dd.propagate(detuning, angle_error, scale, total)?;
    Ok((u.ee() * u.gg().conj(), u.eg().norm_sqr()))
}

#[derive(Default)]
struct Partial {
    total: ComplexSum,
    optical: ComplexSum,
    spin: ComplexSum,
    excited: ComplexSum,
    residual: CompensatedSum,
    trace: Vec<ComplexSum>,
}

/// Monte Carlo echo: each ion accumulates a phase set by its detunings and
/// the interval signs, and the decoupling block acts on its spin
/// coherence as an SU(2) propagator.
pub fn simulate_echo(
    schedule: &ProtocolSchedule,
    medium: &EchoMedium,
    errors: &PulseErrorModel,
    n_ions: usize,
    seed: u64,
) -> Result<EchoResult> {
    if n_ions == 0 {
        return Err(Error::EmptyEnsemble);
    }
    schedule.validate()?;
    medium.validate()?;
    errors.validate()?;
    let [lead, storage, gap, rephase, delay] = schedule.intervals();
    let echo = schedule.echo_time;
    let window = schedule.detection_window;
    let trace_dt: Vec<f64> = (0..TRACE_POINTS).map(|j| window * (j as f64 / (TRACE_POINTS - 1) as f64 - 0.5)).collect();

    let n_chunks = n_ions.div_ceil(SAMPLE_CHUNK);
    let partials = par::map_indexed(n_chunks, |chunk| -> Result<Partial> {
        let len = SAMPLE_CHUNK.min(n_ions - chunk * SAMPLE_CHUNK);
        let c = chunk as u64;
        let opt = medium.optical.sample_chunk(stream_seed(seed, TAG_OPTICAL), c, len);
        let spin = medium.spin.sample_chunk(stream_seed(seed, TAG_SPIN), c, len);
        let exc = medium.excited.sample_chunk(stream_seed(seed, TAG_EXCITED), c, len);
        let scale = errors.angle_scale.sample_chunk(stream_seed(seed, TAG_SCALE), c, len);
        let mut acc = Partial { trace: vec![ComplexSum::default(); TRACE_POINTS], ..Default::default() };
        for i in 0..len {
            let z_opt = phasor(opt[i] * (lead - gap + delay));
            let (a_spin, resid) = match &schedule.dd_block {
                Some(dd) => dd_amplitude(dd, spin[i], errors.angle_error, scale[i], storage)?,
                None => (phasor(spin[i] * storage), 0.0),
            };
            let z_spin = phasor(spin[i] * gap) * a_spin;
            let z_exc = phasor(exc[i] * (gap + rephase));
            let z = z_opt * z_spin * z_exc;
            acc.total.add(z);
            acc.optical.add(z_opt);
            acc.spin.add(z_spin);
            acc.excited.add(z_exc);
            acc.residual.add(resid);
            for (slot, dt) in acc.trace.iter_mut().zip(&trace_dt) {
                slot.add(z * phasor(opt[i] * dt));
            }
        }
        Ok(acc)
    });

    let mut total = ComplexSum::default();
    let mut optical = ComplexSum::default();
    let mut spin = ComplexSum::default();
    let mut excited = ComplexSum::default();
    let mut residual = CompensatedSum::default();
    let mut trace = vec![ComplexSum::default(); TRACE_POINTS];
    for p in partials {
        let p = p?;
        total.add(p.total.value());
        optical.add(p.optical.value());
        spin.add(p.spin.value());
        excited.add(p.excited.value());
        residual.add(p.residual.value());
        for (t, v) in trace.iter_mut().zip(&p.trace) {
            t.add(v.value());
        }
    }
    let n = n_ions as f64;
    let mean_sq = |s: &ComplexSum| (s.value() / n).norm_sqr();
    let absorption = absorption_factor(medium.optical_depth);
    let control = medium.eta_control.powi(4);
    let decoherence = (-2.0 * medium.optical_decoherence * schedule.t42).exp();
    let scale = absorption * control * decoherence;
    let ensemble = mean_sq(&total);
    let amp = scale.sqrt();
    let amplitude_trace = trace
        .iter()
        .zip(&trace_dt)
        .map(|(s, dt)| {
            let a = s.value() / n * amp;
            TracePoint { time: echo + dt, re: a.re, im: a.im }
        })
        .collect();
    Ok(EchoResult {
        efficiency: (scale * ensemble).clamp(0.0, 1.0),
        echo_time: echo,
        amplitude_trace,
        residual_spin_population: residual.value() / n,
        diagnostics: EchoDiagnostics {
            absorption_factor: absorption,
            control_factor: control,
            decoherence_factor: decoherence,
            ensemble_factor: ensemble,
            optical_dephasing: mean_sq(&optical),
            spin_dephasing: mean_sq(&spin),
            excited_dephasing: mean_sq(&excited),
        },
    })
}

/// Result of propagating the stored spin coherence through a DD block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinRephasing {
    /// `|<final coherence>|^2` relative to the initial coherence.
    pub rephasing_efficiency: f64,
    /// Mean population left in the wrong level.
    pub residual_population: f64,
}

/// Spin-only benchmark of a decoupling block under pulse errors.
pub fn spin_rephasing_efficiency(
    dd: &DdSequence,
    errors: &PulseErrorModel,
    n_ions: usize,
    seed: u64,
) -> Result<SpinRephasing> {
    if n_ions == 0 {
        return Err(Error::EmptyEnsemble);
    }
    dd.validate()?;
    errors.validate()?;
    let n_chunks = n_ions.div_ceil(SAMPLE_CHUNK);
    let partials = par::map_indexed(n_chunks, |chunk| -> Result<(Complex64, f64)> {
        let len = SAMPLE_CHUNK.min(n_ions - chunk * SAMPLE_CHUNK);
        let c = chunk as u64;
        let det = errors.detuning_spread.sample_chunk(stream_seed(seed, TAG_SPIN), c, len);
        let scale = errors.angle_scale.sample_chunk(stream_seed(seed, TAG_SCALE), c, len);
        let mut amp = ComplexSum::default();
        let mut res = CompensatedSum::default();
        for i in 0..len {
            let (a, r) = dd_amplitude(dd, det[i], errors.angle_error, scale[i], dd.duration)?;
            amp.add(a);
            res.add(r);
        }
        Ok((amp.value(), res.value()))
    });
    let mut amp = ComplexSum::default();
    let mut res = CompensatedSum::default();
    for p in partials {
        let (a, r) = p?;
        amp.add(a);
        res.add(r);
    }
    let n = n_ions as f64;
    Ok(SpinRephasing { rephasing_efficiency: (amp.value() / n).norm_sqr(), residual_population: res.value() / n })
}
