//! Signal-to-noise ratio and simulated count histogram for one input state.

use echomem::photonics::{
    expected_signal, simulate_counts, snr, Analysis, InputState, MemoryChannel, DEFAULT_DETECTION_WINDOW,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{json, Experiment};
use crate::config::{Check, Issues};
use crate::error::CliError;
use crate::output::Artifacts;

fn default_channel() -> MemoryChannel {
    MemoryChannel::new(0.12, 0.0098)
}

fn default_mu() -> f64 {
    1.07
}

fn default_state() -> InputState {
    InputState::Plus
}

fn default_analysis() -> Analysis {
    Analysis::HalfPiPair { phase: 0.0 }
}

fn default_repetitions() -> u64 {
    100_000
}

fn default_window() -> f64 {
    DEFAULT_DETECTION_WINDOW
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrRun {
    #[serde(default = "default_channel")]
    pub channel: MemoryChannel,
    #[serde(default = "default_mu")]
    pub mu_q: f64,
    #[serde(default = "default_state")]
    pub state: InputState,
    #[serde(default = "default_analysis")]
    pub analysis: Analysis,
    #[serde(default = "default_repetitions")]
    pub repetitions: u64,
    /// Width of one output bin, s.
    #[serde(default = "default_window")]
    pub detection_window: f64,
}

impl Check for SnrRun {
    fn check(&self, issues: &mut Issues) {
        issues.core("/channel", self.channel.validate());
        issues.non_negative("/mu_q", self.mu_q);
        if let Analysis::HalfPiPair { phase } = self.analysis {
            issues.finite("/analysis/phase", phase);
        }
        if self.repetitions == 0 {
            issues.push("/repetitions", "must be at least 1");
        }
        issues.positive("/detection_window", self.detection_window);
    }
}

impl Experiment for SnrRun {
    const NAME: &'static str = "snr";

    fn run(&self, seed: u64, out: &mut Artifacts) -> Result<Value, CliError> {
        let s = snr(self.mu_q, self.channel.eta_m, self.channel.p_n)?;
        let qubit = self.state.qubit(self.mu_q);
        let expected: Vec<f64> =
            expected_signal(&self.channel, &qubit, &self.analysis)?.into_iter().map(|v| v + self.channel.p_n).collect();
        let hist =
            simulate_counts(&self.channel, &qubit, &self.analysis, self.repetitions, self.detection_window, seed)?;
        out.text("snr_histogram.csv", hist.to_csv());
        Ok(json!({
            "snr": json(&s),
            "expected_clicks_per_bin": expected,
            "measured_clicks_per_bin": hist.means(),
            "counts": hist.counts,
        }))
    }

    fn plot(&self) -> String {
        "set datafile separator \",\"\nset xlabel \"time (s)\"\nset ylabel \"counts\"\nset style fill solid 0.5\n\
         plot \"snr_histogram.csv\" using (($1+$2)/2):3:($2-$1) skip 1 with boxes title \"counts\"\n"
            .to_string()
    }
}
