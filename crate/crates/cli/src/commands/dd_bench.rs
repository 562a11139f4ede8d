//! Residual population and rephasing of decoupling blocks under pulse
//! errors.

use std::f64::consts::PI;

use echomem::echosim::{spin_rephasing_efficiency, PulseErrorModel};
use echomem::io::{csv_table, fmt_f64};
use echomem::spectral::{Pulse, SpectralDistribution};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::echo_decay::SequenceKind;
use super::{default_rf_pi, derive_seed, Experiment};
use crate::config::{Check, Issues};
use crate::error::CliError;
use crate::output::Artifacts;

fn default_sequences() -> Vec<SequenceKind> {
    vec![SequenceKind::Xx, SequenceKind::Xxxx, SequenceKind::Xy4]
}

fn default_angle_errors() -> Vec<f64> {
    (0..=5).map(|k| 0.02 * PI * k as f64).collect()
}

fn default_block() -> f64 {
    240e-6
}

fn one() -> usize {
    1
}

fn default_ions() -> usize {
    10_000
}

fn unit_scale() -> SpectralDistribution {
    SpectralDistribution::delta().centered_at(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DdBench {
    #[serde(default = "default_sequences")]
    pub sequences: Vec<SequenceKind>,
    #[serde(default = "default_block")]
    pub block_duration: f64,
    #[serde(default = "one")]
    pub repeats: usize,
    #[serde(default = "default_rf_pi")]
    pub pulse: Pulse,
    #[serde(default)]
    pub finite_pulses: bool,
    /// Rotation-angle errors, rad.
    #[serde(default = "default_angle_errors")]
    pub angle_errors: Vec<f64>,
    #[serde(default = "SpectralDistribution::delta")]
    pub detuning_spread: SpectralDistribution,
    #[serde(default = "unit_scale")]
    pub angle_scale: SpectralDistribution,
    #[serde(default = "default_ions")]
    pub ions: usize,
}

impl DdBench {
    fn errors(&self, delta: f64) -> PulseErrorModel {
        PulseErrorModel { angle_error: delta, detuning_spread: self.detuning_spread, angle_scale: self.angle_scale }
    }
}

impl Check for DdBench {
    fn check(&self, issues: &mut Issues) {
        issues.at_least("/sequences", self.sequences.len(), 1);
        issues.positive("/block_duration", self.block_duration);
        issues.at_least("/repeats", self.repeats, 1);
        issues.core("/pulse", self.pulse.validate());
        issues.at_least("/angle_errors", self.angle_errors.len(), 1);
        for (k, &d) in self.angle_errors.iter().enumerate() {
            issues.core(&format!("/angle_errors/{k}"), self.errors(d).validate());
        }
        issues.core("/detuning_spread", self.detuning_spread.validate());
        issues.core("/angle_scale", self.angle_scale.validate());
        issues.at_least("/ions", self.ions, 1);
        if issues.is_empty() {
            for (k, s) in self.sequences.iter().enumerate() {
                let dd = s.build(self.block_duration, self.pulse).with_finite_pulses(self.finite_pulses);
                issues.core(&format!("/sequences/{k}"), dd.validate());
            }
        }
    }
}

impl Experiment for DdBench {
    const NAME: &'static str = "dd-bench";

    fn run(&self, seed: u64, out: &mut Artifacts) -> Result<Value, CliError> {
        let mut rows = Vec::new();
        let mut summary = Vec::new();
        for (i, s) in self.sequences.iter().enumerate() {
            let dd =
                s.build(self.block_duration, self.pulse).repeated(self.repeats).with_finite_pulses(self.finite_pulses);
            let mut worst: f64 = 0.0;
            for (j, &delta) in self.angle_errors.iter().enumerate() {
                let sub = derive_seed(seed, (i * self.angle_errors.len() + j) as u64);
                let r = spin_rephasing_efficiency(&dd, &self.errors(delta), self.ions, sub)?;
                worst = worst.max(r.residual_population);
                rows.push(vec![
                    s.label().to_string(),
                    fmt_f64(delta),
                    fmt_f64(r.residual_population),
                    fmt_f64(r.rephasing_efficiency),
                ]);
            }
            summary.push(json!({"sequence": s.label(), "worst_residual_population": worst}));
        }
        out.text(
            "dd_bench.csv",
            csv_table(&["sequence", "angle_error_rad", "residual_population", "rephasing_efficiency"], rows),
        );
        Ok(json!({ "sequences": summary }))
    }

    fn plot(&self) -> String {
        let mut s = String::from(
            "set datafile separator \",\"\nset xlabel \"angle error (rad)\"\nset ylabel \"residual population\"\nplot ",
        );
        let parts: Vec<String> = self
            .sequences
            .iter()
            .map(|q| {
                format!(
                    "\"dd_bench.csv\" using 2:(strcol(1) eq \"{0}\" ? $3 : NaN) skip 1 with linespoints title \"{0}\"",
                    q.label()
                )
            })
            .collect();
        s.push_str(&parts.join(", \\\n     "));
        s.push('\n');
        s
    }
}
