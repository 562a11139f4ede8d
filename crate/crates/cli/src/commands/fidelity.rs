//! Storage fidelities: measured rows, Monte Carlo rows, the theoretical curve
//! and the classical bound.

use echomem::io::{csv_table, fmt_f64};
use echomem::photonics::{
    classical_bound, measured_fidelity, theoretical_fidelity, FidelityReport, InputState, MemoryChannel, Verdict,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{derive_seed, json, Experiment};
use crate::config::{Check, Issues};
use crate::error::CliError;
use crate::output::Artifacts;

/// Per-state fidelities measured at one input level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasuredRow {
    pub mu_q: f64,
    pub f_e: f64,
    pub f_l: f64,
    pub f_plus: f64,
    pub f_plus_i: f64,
}

fn default_repetitions() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Simulate {
    pub mu_q: Vec<f64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: u64,
}

/// Log-spaced curve of theory and bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Curve {
    pub mu_min: f64,
    pub mu_max: f64,
    pub points: usize,
}

impl Default for Curve {
    fn default() -> Self {
        Self { mu_min: 0.01, mu_max: 10.0, points: 121 }
    }
}

impl Curve {
    fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.mu_min];
        }
        let r = (self.mu_max / self.mu_min).ln();
        (0..self.points).map(|k| self.mu_min * (r * k as f64 / (self.points - 1) as f64).exp()).collect()
    }
}

/// The three input levels measured on the device.
fn default_measured() -> Vec<MeasuredRow> {
    [(0.66, [0.907, 0.908, 0.842, 0.833]), (1.07, [0.924, 0.938, 0.877, 0.883]), (4.21, [0.986, 0.982, 0.975, 0.972])]
        .into_iter()
        .map(|(mu_q, f)| MeasuredRow { mu_q, f_e: f[0], f_l: f[1], f_plus: f[2], f_plus_i: f[3] })
        .collect()
}

fn default_channel() -> MemoryChannel {
    MemoryChannel::new(0.12, 0.0098)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fidelity {
    #[serde(default = "default_channel")]
    pub channel: MemoryChannel,
    #[serde(default = "default_measured")]
    pub measured: Vec<MeasuredRow>,
    #[serde(default)]
    pub simulate: Option<Simulate>,
    #[serde(default)]
    pub curve: Curve,
}

#[derive(Debug, Serialize)]
struct Row {
    source: &'static str,
    #[serde(flatten)]
    report: FidelityReport,
}

impl Check for Fidelity {
    fn check(&self, issues: &mut Issues) {
        issues.core("/channel", self.channel.validate());
        if !(self.channel.eta_m > 0.0) {
            issues.push("/channel/eta_m", "must be positive");
        }
        for (k, r) in self.measured.iter().enumerate() {
            issues.positive(&format!("/measured/{k}/mu_q"), r.mu_q);
            for (name, v) in [("f_e", r.f_e), ("f_l", r.f_l), ("f_plus", r.f_plus), ("f_plus_i", r.f_plus_i)] {
                issues.probability(&format!("/measured/{k}/{name}"), v);
            }
        }
        if let Some(s) = &self.simulate {
            for (k, &mu) in s.mu_q.iter().enumerate() {
                issues.positive(&format!("/simulate/mu_q/{k}"), mu);
            }
            if s.repetitions == 0 {
                issues.push("/simulate/repetitions", "must be at least 1");
            }
        }
        issues.positive("/curve/mu_min", self.curve.mu_min);
        issues.positive("/curve/mu_max", self.curve.mu_max);
        issues.at_least("/curve/points", self.curve.points, 1);
        if self.curve.points > 1 && !(self.curve.mu_max > self.curve.mu_min) {
            issues.push("/curve/mu_max", "must exceed mu_min");
        }
    }
}

fn verdict(v: Verdict) -> &'static str {
    match v {
        Verdict::Quantum => "quantum",
        Verdict::Classical => "classical",
    }
}

impl Experiment for Fidelity {
    const NAME: &'static str = "fidelity";

    fn run(&self, seed: u64, out: &mut Artifacts) -> Result<Value, CliError> {
        let mut rows = Vec::new();
        for r in &self.measured {
            let report = FidelityReport::new(r.mu_q, &self.channel, [r.f_e, r.f_l, r.f_plus, r.f_plus_i])?;
            rows.push(Row { source: "measured", report });
        }
        if let Some(sim) = &self.simulate {
            for (i, &mu) in sim.mu_q.iter().enumerate() {
                let mut f = [0.0; 4];
                for (j, state) in InputState::ALL.into_iter().enumerate() {
                    let sub = derive_seed(seed, (4 * i + j) as u64);
                    f[j] = measured_fidelity(&self.channel, state, mu, sim.repetitions, sub)?;
                }
                rows.push(Row { source: "simulated", report: FidelityReport::new(mu, &self.channel, f)? });
            }
        }
        let table = rows.iter().map(|r| {
            let p = &r.report;
            vec![
                r.source.to_string(),
                fmt_f64(p.mu_q),
                fmt_f64(p.f_e),
                fmt_f64(p.f_l),
                fmt_f64(p.f_plus),
                fmt_f64(p.f_plus_i),
                fmt_f64(p.f_total),
                fmt_f64(p.f_theory),
                fmt_f64(p.classical_bound),
                p.n_min.to_string(),
                verdict(p.verdict).to_string(),
            ]
        });
        out.text(
            "fidelity_table.csv",
            csv_table(
                &[
                    "source",
                    "mu_q",
                    "f_e",
                    "f_l",
                    "f_plus",
                    "f_plus_i",
                    "f_total",
                    "f_theory",
                    "classical_bound",
                    "n_min",
                    "verdict",
                ],
                table.collect::<Vec<_>>(),
            ),
        );
        let mut curve = Vec::new();
        for mu in self.curve.values() {
            let th = theoretical_fidelity(mu, &self.channel)?;
            let b = classical_bound(mu, self.channel.eta_m)?;
            curve.push(vec![fmt_f64(mu), fmt_f64(th), fmt_f64(b.bound), b.n_min.to_string()]);
        }
        out.text("fidelity_curve.csv", csv_table(&["mu_q", "f_theory", "classical_bound", "n_min"], curve));
        let reports = json(&rows);
        out.json("fidelity.json", &json!({ "reports": reports }))?;
        Ok(json!({ "reports": reports }))
    }

    fn plot(&self) -> String {
        "set datafile separator \",\"\nset logscale x\nset xlabel \"mu_q\"\nset ylabel \"fidelity\"\n\
         plot \"fidelity_curve.csv\" using 1:3 skip 1 with lines title \"classical bound\", \\\n     \
         \"\" using 1:2 skip 1 with lines title \"theory\", \\\n     \
         \"fidelity_table.csv\" using 2:7 skip 1 with points title \"F_T\"\n"
            .to_string()
    }
}
