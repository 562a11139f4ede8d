pub mod dd_bench;
pub mod echo_decay;
pub mod fidelity;
pub mod fit;
pub mod holeburn;
pub mod rf_map;
pub mod snr;

use std::f64::consts::PI;
use std::path::PathBuf;

use echomem::spectral::Pulse;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::config::Check;
use crate::error::CliError;
use crate::output::Artifacts;

/// One subcommand: a config type that knows how to run itself.
pub trait Experiment: DeserializeOwned + Serialize + Check + Sync {
    const NAME: &'static str;

    /// Files read by the run, digested into the run record.
    fn inputs(&self) -> Vec<PathBuf> {
        Vec::new()
    }

    /// Computes the artifacts and returns a JSON summary of the results.
    fn run(&self, seed: u64, out: &mut Artifacts) -> Result<Value, CliError>;

    /// A gnuplot script over the CSV artifacts.
    fn plot(&self) -> String;
}

/// Independent sub-seed `k` of a run seed.
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Square RF pi pulse at the 16.7 kHz Rabi frequency.
pub fn default_rf_pi() -> Pulse {
    Pulse::square_with_area(2.0 * PI * 16.7e3, PI)
}

pub(crate) fn json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}
