//! Echo efficiency against t31, t42 or spin storage, with the closed-form
//! model alongside.

use echomem::echosim::{simulate_echo, DdSequence, EchoMedium, NlpeTiming, PulseErrorModel};
use echomem::io::{csv_table, fmt_f64};
use echomem::model::{nlpe_efficiency, NlpeParams};
use echomem::spectral::{Pulse, SpectralDistribution};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{default_rf_pi, Experiment};
use crate::config::{Check, Issues, Range};
use crate::error::CliError;
use crate::output::Artifacts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    T31,
    T42,
    SpinStorage,
}

impl SweepAxis {
    fn column(self) -> usize {
        match self {
            SweepAxis::T31 => 1,
            SweepAxis::T42 => 2,
            SweepAxis::SpinStorage => 3,
        }
    }
}

/// Sweep values, given either as a list or as a range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self { axis: SweepAxis::T42, values: None, range: Some(Range::new(12e-6, 68e-6, 15)) }
    }
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        match (&self.values, &self.range) {
            (Some(v), _) => v.clone(),
            (None, Some(r)) => r.values(),
            (None, None) => Vec::new(),
        }
    }
}

/// Fixed intervals; the swept one is replaced point by point. Sweeping t31
/// or the spin storage keeps the excited-state gap `t31 - spin_storage`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub t31: f64,
    pub t42: f64,
    pub spin_storage: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Self { t31: 40e-6, t42: 25e-6, spin_storage: 30e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    Xx,
    Xxxx,
    Xy4,
}

impl SequenceKind {
    pub fn label(self) -> &'static str {
        match self {
            SequenceKind::Xx => "xx",
            SequenceKind::Xxxx => "xxxx",
            SequenceKind::Xy4 => "xy4",
        }
    }

    pub fn build(self, duration: f64, pulse: Pulse) -> DdSequence {
        match self {
            SequenceKind::Xx => DdSequence::xx(duration, pulse),
            SequenceKind::Xxxx => DdSequence::xxxx(duration, pulse),
            SequenceKind::Xy4 => DdSequence::xy4(duration, pulse),
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DdConfig {
    pub sequence: SequenceKind,
    pub block_duration: f64,
    #[serde(default = "one")]
    pub repeats: usize,
    #[serde(default = "default_rf_pi")]
    pub pulse: Pulse,
    #[serde(default)]
    pub finite_pulses: bool,
}

impl DdConfig {
    pub fn total_duration(&self) -> f64 {
        self.block_duration * self.repeats as f64
    }

    pub fn build(&self) -> DdSequence {
        self.sequence
            .build(self.block_duration, self.pulse)
            .repeated(self.repeats)
            .with_finite_pulses(self.finite_pulses)
    }

    pub fn check(&self, path: &str, issues: &mut Issues) {
        issues.positive(&format!("{path}/block_duration"), self.block_duration);
        issues.at_least(&format!("{path}/repeats"), self.repeats, 1);
        issues.core(&format!("{path}/pulse"), self.pulse.validate());
        if issues.is_empty() {
            issues.core(path, self.build().validate());
        }
    }
}

fn default_medium() -> EchoMedium {
    EchoMedium {
        spin: SpectralDistribution::gaussian(6.0e3),
        excited: SpectralDistribution::gaussian(18.0e3),
        optical_decoherence: 8.0e3,
        ..EchoMedium::ideal(2.09, 0.85)
    }
}

fn default_ions() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchoDecay {
    #[serde(default = "default_medium")]
    pub medium: EchoMedium,
    #[serde(default)]
    pub errors: PulseErrorModel,
    #[serde(default)]
    pub timing: Timing,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub dd: Option<DdConfig>,
    #[serde(default = "default_ions")]
    pub ions: usize,
}

impl EchoDecay {
    /// `(t31, t42, spin_storage)` for each sweep value.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let Timing { t31, t42, spin_storage } = self.timing;
        let gap = t31 - spin_storage;
        self.sweep
            .values()
            .into_iter()
            .map(|v| match self.sweep.axis {
                SweepAxis::T31 => (v, t42, v - gap),
                SweepAxis::T42 => (t31, v, spin_storage),
                SweepAxis::SpinStorage => (v + gap, t42, v),
            })
            .collect()
    }

    fn model(&self) -> NlpeParams {
        let m = &self.medium;
        NlpeParams {
            d: m.optical_depth,
            eta_control: m.eta_control,
            gamma13: m.spin.fwhm().unwrap_or(0.0),
            gamma35: m.excited.fwhm().unwrap_or(0.0),
            gamma: m.optical_decoherence,
        }
    }
}

impl Check for EchoDecay {
    fn check(&self, issues: &mut Issues) {
        issues.core("/medium", self.medium.validate());
        issues.core("/errors", self.errors.validate());
        issues.positive("/timing/t31", self.timing.t31);
        issues.positive("/timing/t42", self.timing.t42);
        issues.positive("/timing/spin_storage", self.timing.spin_storage);
        issues.at_least("/ions", self.ions, 1);
        match (&self.sweep.values, &self.sweep.range) {
            (Some(_), Some(_)) | (None, None) => issues.push("/sweep", "give exactly one of values and range"),
            (Some(v), None) => {
                issues.at_least("/sweep/values", v.len(), 1);
                for (k, &x) in v.iter().enumerate() {
                    issues.positive(&format!("/sweep/values/{k}"), x);
                }
            }
            (None, Some(r)) => {
                r.check("/sweep/range", issues);
                issues.positive("/sweep/range/start", r.start);
            }
        }
        if let Some(dd) = &self.dd {
            dd.check("/dd", issues);
        }
        if !issues.is_empty() {
            return;
        }
        for (k, (t31, t42, storage)) in self.points().into_iter().enumerate() {
            if let Some(dd) = &self.dd {
                if dd.total_duration() > storage * (1.0 + 1e-12) {
                    issues.push(
                        "/dd/block_duration",
                        format!(
                            "decoupling of {} s ({} x {} s) does not fit in the {storage} s spin storage of sweep point {k}",
                            dd.total_duration(),
                            dd.repeats,
                            dd.block_duration
                        ),
                    );
                    return;
                }
            }
            if let Err(e) = NlpeTiming::new(t31, t42, storage).build(self.dd.as_ref().map(DdConfig::build)) {
                issues.push("/sweep", format!("sweep point {k} (t31 {t31}, t42 {t42}, storage {storage}): {e}"));
                return;
            }
        }
    }
}

impl Experiment for EchoDecay {
    const NAME: &'static str = "echo-decay";

    fn run(&self, seed: u64, out: &mut Artifacts) -> Result<Value, CliError> {
        let dd = self.dd.as_ref().map(DdConfig::build);
        let params = self.model();
        let mut rows = Vec::new();
        let mut effs = Vec::new();
        for (k, (t31, t42, storage)) in self.points().into_iter().enumerate() {
            let schedule = NlpeTiming::new(t31, t42, storage).build(dd.clone())?;
            let r = simulate_echo(&schedule, &self.medium, &self.errors, self.ions, seed)?;
            if k == 0 {
                out.text("echo_trace.csv", r.trace_csv());
            }
            let model = nlpe_efficiency(&params, t31, t42)?;
            rows.push(vec![
                fmt_f64(t31),
                fmt_f64(t42),
                fmt_f64(storage),
                fmt_f64(r.efficiency),
                fmt_f64(model),
                fmt_f64(r.residual_spin_population),
            ]);
            effs.push(r.efficiency);
        }
        out.text(
            "echo_decay.csv",
            csv_table(
                &["t31_s", "t42_s", "spin_storage_s", "efficiency", "model_efficiency", "residual_spin_population"],
                rows,
            ),
        );
        let max = effs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = effs.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(json!({
            "points": effs.len(),
            "efficiency_max": max,
            "efficiency_min": min,
            "relative_variation": if max > 0.0 { (max - min) / max } else { 0.0 },
        }))
    }

    fn plot(&self) -> String {
        let c = self.sweep.axis.column();
        format!(
            "set datafile separator \",\"\nset key top right\nset xlabel \"{} (s)\"\nset ylabel \"efficiency\"\n\
             plot \"echo_decay.csv\" using {c}:4 skip 1 with points title \"monte carlo\", \\\n     \
             \"\" using {c}:5 skip 1 with lines title \"closed form\"\n",
            ["t31", "t42", "spin storage"][c - 1]
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storage_sweep_keeps_the_gap() {
        let cfg = EchoDecay {
            sweep: Sweep { axis: SweepAxis::SpinStorage, values: Some(vec![10e-6, 50e-6]), range: None },
            ..serde_json::from_str("{}").unwrap()
        };
        let want = [(20e-6, 25e-6, 10e-6), (60e-6, 25e-6, 50e-6)];
        for (got, want) in cfg.points().iter().zip(want) {
            assert!((got.0 - want.0).abs() < 1e-18 && got.1 == want.1 && got.2 == want.2, "{got:?}");
        }
    }

    #[test]
    fn long_decoupling_is_a_cross_field_error() {
        let cfg: EchoDecay = serde_json::from_value(json!({
            "dd": {"sequence": "xy4", "block_duration": 160e-6, "repeats": 2},
            "sweep": {"axis": "spin_storage", "values": [400e-6, 300e-6]},
        }))
        .unwrap();
        let mut issues = Issues::default();
        cfg.check(&mut issues);
        assert_eq!(issues.0.len(), 1);
        assert_eq!(issues.0[0].path, "/dd/block_duration");
        assert!(issues.0[0].message.contains("sweep point 1"));
    }
}
