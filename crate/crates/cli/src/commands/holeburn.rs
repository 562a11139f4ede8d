//! Prepared absorption profile after an optical pumping sequence.

use echomem::holeburn::{absorption_spectrum, burn, FrequencyGrid, LevelScheme, PreparationRecipe, PumpStep};
use echomem::spectral::Band;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::Experiment;
use crate::config::{Check, Issues};
use crate::error::CliError;
use crate::output::Artifacts;

fn default_grid() -> FrequencyGrid {
    FrequencyGrid::new(-4e6, 4e6, 801)
}

fn default_depth() -> f64 {
    2.09
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Holeburn {
    #[serde(default)]
    pub scheme: LevelScheme,
    #[serde(default)]
    pub recipe: PreparationRecipe,
    /// Explicit pump sequence; replaces the recipe when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<PumpStep>>,
    #[serde(default = "default_grid")]
    pub grid: FrequencyGrid,
    #[serde(default = "default_depth")]
    pub background_depth: f64,
}

impl Holeburn {
    fn steps(&self) -> Vec<PumpStep> {
        self.steps.clone().unwrap_or_else(|| self.recipe.steps())
    }
}

impl Check for Holeburn {
    fn check(&self, issues: &mut Issues) {
        issues.core("/scheme", self.scheme.validate());
        issues.core("/grid", self.grid.validate());
        issues.non_negative("/background_depth", self.background_depth);
        let r = &self.recipe;
        for (name, v) in [
            ("window_width", r.window_width),
            ("feature_width", r.feature_width),
            ("step_duration", r.step_duration),
            ("window_rate", r.window_rate),
            ("feature_rate", r.feature_rate),
        ] {
            issues.positive(&format!("/recipe/{name}"), v);
        }
        if r.feature_width > r.window_width {
            issues.push("/recipe/feature_width", "must not exceed window_width");
        }
        if let Some(steps) = &self.steps {
            for (k, s) in steps.iter().enumerate() {
                issues.core(&format!("/steps/{k}"), s.validate(&self.scheme));
            }
        }
    }
}

impl Experiment for Holeburn {
    const NAME: &'static str = "holeburn";

    fn run(&self, _seed: u64, out: &mut Artifacts) -> Result<Value, CliError> {
        let pops = burn(&self.scheme, self.grid, &self.steps())?;
        let profile = absorption_spectrum(&pops, &self.scheme, self.background_depth)?;
        out.text("holeburn_profile.csv", profile.to_csv());
        let summary = if self.steps.is_none() {
            let window = Band::centered(self.recipe.window_width);
            let exclude = Band::centered(self.recipe.feature_width + 0.4e6);
            let residual = profile.mean_alpha(window, Some(exclude))?;
            let fwhm = profile.feature_fwhm(window)?;
            json!({
                "window_width_hz": self.recipe.window_width,
                "window_residual_alpha": residual,
                "window_residual_fraction": if self.background_depth > 0.0 { residual / self.background_depth } else { 0.0 },
                "feature_fwhm_hz": fwhm,
            })
        } else {
            json!({})
        };
        Ok(summary)
    }

    fn plot(&self) -> String {
        "set datafile separator \",\"\nset xlabel \"detuning (Hz)\"\nset ylabel \"alpha L\"\n\
         plot \"holeburn_profile.csv\" using 1:2 skip 1 with lines title \"prepared profile\"\n"
            .to_string()
    }
}
