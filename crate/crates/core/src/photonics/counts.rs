use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use num_complex::Complex64;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{fidelity_from_counts, MemoryChannel};
use crate::error::{ensure_finite, Error, Result};
use crate::io::{csv_table, fmt_f64};
use crate::par;
use crate::spectral::{chunk_rng, SAMPLE_CHUNK};

/// Default detection window, seconds.
pub const DEFAULT_DETECTION_WINDOW: f64 = 1.1e-6;

/// Weak coherent time-bin qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeBinQubit {
    pub amp_early: Complex64,
    pub amp_late: Complex64,
    pub mean_photons: f64,
}

impl TimeBinQubit {
    pub fn new(amp_early: Complex64, amp_late: Complex64, mean_photons: f64) -> Result<Self> {
        let q = Self { amp_early, amp_late, mean_photons };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("mean_photons", self.mean_photons)?;
        if self.mean_photons < 0.0 {
            return Err(Error::domain("mean photon number must be non-negative"));
        }
        let norm = self.amp_early.norm_sqr() + self.amp_late.norm_sqr();
        if !((norm - 1.0).abs() <= 1e-12) {
            return Err(Error::domain(format!("qubit amplitudes not normalized (norm {norm})")));
        }
        Ok(())
    }

    /// The orthogonal state `(-a_l*, a_e*)`.
    pub fn orthogonal(&self) -> Self {
        Self { amp_early: -self.amp_late.conj(), amp_late: self.amp_early.conj(), mean_photons: self.mean_photons }
    }
}

/// The four input states used for process characterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputState {
    Early,
    Late,
    Plus,
    PlusI,
}

impl InputState {
    pub const ALL: [InputState; 4] = [InputState::Early, InputState::Late, InputState::Plus, InputState::PlusI];

    pub fn qubit(self, mean_photons: f64) -> TimeBinQubit {
        let (e, l) = match self {
            InputState::Early => (Complex64::ONE, Complex64::ZERO),
            InputState::Late => (Complex64::ZERO, Complex64::ONE),
            InputState::Plus => (Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0)),
            InputState::PlusI => (Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(0.0, FRAC_1_SQRT_2)),
        };
        TimeBinQubit { amp_early: e, amp_late: l, mean_photons }
    }

    /// Readout settings `(projection onto the state, projection onto its
    /// orthogonal complement)` and the bin that carries the projection.
    fn projections(self) -> (Analysis, Analysis, usize, usize) {
        match self {
            InputState::Early => (Analysis::FullPi, Analysis::FullPi, 0, 1),
            InputState::Late => (Analysis::FullPi, Analysis::FullPi, 1, 0),
            InputState::Plus => (Analysis::HalfPiPair { phase: 0.0 }, Analysis::HalfPiPair { phase: PI }, 1, 1),
            InputState::PlusI => {
                (Analysis::HalfPiPair { phase: FRAC_PI_2 }, Analysis::HalfPiPair { phase: -FRAC_PI_2 }, 1, 1)
            }
        }
    }
}

/// How the stored qubit is read out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Analysis {
    /// A single rephasing pulse: early and late bins come out unchanged.
    FullPi,
    /// The retrieval pulse split into two half-area pulses, so the memory
    /// acts as an unbalanced interferometer with three output bins.
    HalfPiPair { phase: f64 },
}

impl Analysis {
    pub fn bins(&self) -> usize {
        match self {
            Analysis::FullPi => 2,
            Analysis::HalfPiPair { .. } => 3,
        }
    }

    /// Output-bin amplitudes for input amplitudes `(a_e, a_l)`.
    pub fn amplitudes(&self, a_e: Complex64, a_l: Complex64) -> Vec<Complex64> {
        match *self {
            Analysis::FullPi => vec![a_e, a_l],
            Analysis::HalfPiPair { phase } => {
                let p = Complex64::from_polar(1.0, phase);
                vec![0.5 * a_e, 0.5 * (a_e * p + a_l), 0.5 * a_l * p]
            }
        }
    }
}

/// Expected signal clicks per repetition in each output bin, without noise.
///
/// A classical fidelity `f_c < 1` mixes in the output pattern of the
/// orthogonal state with weight `1 - f_c`.
pub fn expected_signal(channel: &MemoryChannel, qubit: &TimeBinQubit, analysis: &Analysis) -> Result<Vec<f64>> {
    channel.validate()?;
    qubit.validate()?;
    if let Analysis::HalfPiPair { phase } = analysis {
        ensure_finite("phase", *phase)?;
    }
    let scale = qubit.mean_photons * channel.eta_m;
    let good = analysis.amplitudes(qubit.amp_early, qubit.amp_late);
    let orth = qubit.orthogonal();
    let bad = analysis.amplitudes(orth.amp_early, orth.amp_late);
    Ok(good
        .iter()
        .zip(&bad)
        .map(|(g, b)| scale * (channel.f_c * g.norm_sqr() + (1.0 - channel.f_c) * b.norm_sqr()))
        .collect())
}

/// Accumulated photon counts per output bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub repetitions: u64,
    pub detection_window: f64,
}

impl CountHistogram {
    pub fn to_csv(&self) -> String {
        csv_table(
            &["bin_start_s", "bin_end_s", "counts"],
            self.counts
                .iter()
                .enumerate()
                .map(|(k, c)| vec![fmt_f64(self.bin_edges[k]), fmt_f64(self.bin_edges[k + 1]), c.to_string()]),
        )
    }

    /// Mean clicks per repetition in each bin.
    pub fn means(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.repetitions as f64).collect()
    }
}

/// Poisson-samples `repetitions` storage attempts. Each repetition's draws
/// come from a stream fixed by `(seed, repetition)`, so the histogram does
/// not depend on the thread count.
pub fn simulate_counts(
    channel: &MemoryChannel,
    qubit: &TimeBinQubit,
    analysis: &Analysis,
    repetitions: u64,
    detection_window: f64,
    seed: u64,
) -> Result<CountHistogram> {
    if repetitions == 0 {
        return Err(Error::domain("repetitions must be at least 1"));
    }
    ensure_finite("detection_window", detection_window)?;
    if !(detection_window > 0.0) {
        return Err(Error::domain("detection window must be positive"));
    }
    let means: Vec<f64> = expected_signal(channel, qubit, analysis)?.into_iter().map(|s| s + channel.p_n).collect();
    let samplers: Vec<Option<Poisson<f64>>> =
        means.iter().map(|&m| if m > 0.0 { Poisson::new(m).ok() } else { None }).collect();
    let n_chunks = repetitions.div_ceil(SAMPLE_CHUNK as u64) as usize;
    let partial = par::map_indexed(n_chunks, |chunk| {
        let mut rng = chunk_rng(seed, chunk as u64);
        let start = chunk as u64 * SAMPLE_CHUNK as u64;
        let len = (SAMPLE_CHUNK as u64).min(repetitions - start);
        let mut acc = vec![0u64; samplers.len()];
        for _ in 0..len {
            for (slot, s) in acc.iter_mut().zip(&samplers) {
                if let Some(s) = s {
                    *slot += s.sample(&mut rng) as u64;
                }
            }
        }
        acc
    });
    let mut counts = vec![0u64; means.len()];
    for acc in partial {
        for (c, a) in counts.iter_mut().zip(acc) {
            *c += a;
        }
    }
    let bin_edges = (0..=means.len()).map(|k| k as f64 * detection_window).collect();
    Ok(CountHistogram { bin_edges, counts, repetitions, detection_window })
}

/// Monte Carlo fidelity of one input state: counts in the projection onto
/// the state against counts in the orthogonal projection.
///
/// Basis states use the single-pulse readout; superpositions use the split
/// readout at the constructive and destructive phases.
pub fn measured_fidelity(
    channel: &MemoryChannel,
    state: InputState,
    mean_photons: f64,
    repetitions: u64,
    seed: u64,
) -> Result<f64> {
    let qubit = state.qubit(mean_photons);
    let (plus, minus, bin_plus, bin_minus) = state.projections();
    let w = DEFAULT_DETECTION_WINDOW;
    let h_plus = simulate_counts(channel, &qubit, &plus, repetitions, w, seed)?;
    let h_minus = if plus == minus {
        h_plus.clone()
    } else {
        simulate_counts(channel, &qubit, &minus, repetitions, w, seed ^ 0x9e37_79b9_7f4a_7c15)?
    };
    fidelity_from_counts(h_plus.counts[bin_plus], h_minus.counts[bin_minus])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interference_extremes() {
        let ch = MemoryChannel::new(0.12, 0.0);
        let q = InputState::Plus.qubit(1.07);
        let on = expected_signal(&ch, &q, &Analysis::HalfPiPair { phase: 0.0 }).unwrap();
        assert!((on[1] - 1.07 * 0.12 / 2.0).abs() < 1e-15);
        let off = expected_signal(&ch, &q, &Analysis::HalfPiPair { phase: PI }).unwrap();
        assert!(off[1] < 1e-12);
    }

    #[test]
    fn basis_state_goes_to_its_bin() {
        let ch = MemoryChannel::new(0.2, 0.0);
        let q = InputState::Early.qubit(1.0);
        let s = expected_signal(&ch, &q, &Analysis::FullPi).unwrap();
        assert_eq!(s, vec![0.2, 0.0]);
        let h = simulate_counts(&ch, &q, &Analysis::FullPi, 10_000, 1e-6, 1).unwrap();
        assert_eq!(h.counts[1], 0);
        assert!(h.counts[0] > 0);
    }

    #[test]
    fn split_readout_energy_bookkeeping() {
        let ch = MemoryChannel::new(1.0, 0.0);
        let q = TimeBinQubit::new(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8), 1.0).unwrap();
        let total = |phase| expected_signal(&ch, &q, &Analysis::HalfPiPair { phase }).unwrap().iter().sum::<f64>();
        let avg = 0.5 * (total(0.0) + total(PI));
        assert!((avg - 0.5).abs() < 1e-15);
    }

    #[test]
    fn noiseless_split_fidelity_is_one_plus_visibility_over_two() {
        // Unequal amplitudes lower the fringe visibility to 2|a_e a_l|.
        let ch = MemoryChannel::new(0.3, 0.0);
        let q = TimeBinQubit::new(Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0), 2.0).unwrap();
        let on = expected_signal(&ch, &q, &Analysis::HalfPiPair { phase: 0.0 }).unwrap()[1];
        let off = expected_signal(&ch, &q, &Analysis::HalfPiPair { phase: PI }).unwrap()[1];
        let v = 2.0 * 0.6 * 0.8;
        assert!((on / (on + off) - (1.0 + v) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn histogram_is_seed_reproducible() {
        let ch = MemoryChannel::new(0.12, 0.0098);
        let q = InputState::Plus.qubit(1.07);
        let a = simulate_counts(&ch, &q, &Analysis::HalfPiPair { phase: 0.3 }, 5000, 1.1e-6, 42).unwrap();
        let b = par::with_threads(3, || {
            simulate_counts(&ch, &q, &Analysis::HalfPiPair { phase: 0.3 }, 5000, 1.1e-6, 42).unwrap()
        });
        assert_eq!(a, b);
        assert_eq!(a.bin_edges.len(), 4);
        assert!(a.to_csv().starts_with("bin_start_s,bin_end_s,counts\n"));
    }

    #[test]
    fn normalization_enforced() {
        assert!(TimeBinQubit::new(Complex64::ONE, Complex64::ONE, 1.0).is_err());
        let ch = MemoryChannel::new(0.1, 0.01);
        let q = InputState::Early.qubit(1.0);
        assert!(simulate_counts(&ch, &q, &Analysis::FullPi, 0, 1e-6, 0).is_err());
    }
}
