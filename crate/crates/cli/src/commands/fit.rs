//! Least-squares fit of a model family to a CSV data file.

use std::path::{Path, PathBuf};

use echomem::io::{csv_table, fmt_f64, parse_numeric_csv};
use echomem::model::{fit_decay, fit_rabi_nutation, fit_voigt, FitModel, FitResult, Sample};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{json, Experiment};
use crate::config::{Check, Issues};
use crate::error::CliError;
use crate::output::Artifacts;

fn x_col() -> String {
    "x".into()
}

fn y_col() -> String {
    "y".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fit {
    /// CSV file with a header row; relative to the config file.
    pub data: PathBuf,
    pub model: FitModel,
    #[serde(default = "x_col")]
    pub x_column: String,
    #[serde(default = "y_col")]
    pub y_column: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_column: Option<String>,
    /// Starting parameters for decay fits. Guessed from the data if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
}

impl Fit {
    fn samples(&self) -> Result<Vec<Sample>, String> {
        let text = std::fs::read_to_string(&self.data).map_err(|e| format!("{}: {e}", self.data.display()))?;
        let (header, rows) = parse_numeric_csv(&text)?;
        let col = |name: &str| {
            header.iter().position(|h| h == name).ok_or_else(|| format!("no column {name:?} in {}", header.join(",")))
        };
        let ix = col(&self.x_column)?;
        let iy = col(&self.y_column)?;
        let is = self.sigma_column.as_deref().map(col).transpose()?;
        Ok(rows.iter().map(|r| Sample::new(r[ix], r[iy], is.map_or(1.0, |k| r[k]))).collect())
    }
}

impl Check for Fit {
    fn check(&self, issues: &mut Issues) {
        match self.samples() {
            Err(e) => issues.push("/data", e),
            Ok(s) => {
                for (k, p) in s.iter().enumerate() {
                    if !(p.sigma.is_finite() && p.sigma > 0.0) {
                        issues.push("/data", format!("row {k}: sigma must be positive, got {}", p.sigma));
                        break;
                    }
                }
            }
        }
        if let Some(init) = &self.init {
            match self.model {
                FitModel::Decay(m) if init.len() != m.names().len() => {
                    issues.push("/init", format!("{} values given for parameters {}", init.len(), m.names().join(", ")))
                }
                FitModel::Decay(_) => {
                    for (k, &v) in init.iter().enumerate() {
                        issues.finite(&format!("/init/{k}"), v);
                    }
                }
                _ => issues.push("/init", "only decay fits take starting values"),
            }
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        if self.data.is_relative() {
            self.data = base.join(&self.data);
        }
    }
}

fn run_fit(model: FitModel, data: &[Sample], init: Option<&[f64]>) -> echomem::Result<FitResult> {
    match model {
        FitModel::Decay(m) => {
            let guess;
            let init = match init {
                Some(p) => p,
                None => {
                    guess = m.initial_guess(data);
                    &guess
                }
            };
            fit_decay(data, m, init)
        }
        FitModel::Rabi => fit_rabi_nutation(data),
        FitModel::Voigt => fit_voigt(data),
    }
}

impl Experiment for Fit {
    const NAME: &'static str = "fit";

    fn inputs(&self) -> Vec<PathBuf> {
        vec![self.data.clone()]
    }

    fn run(&self, _seed: u64, out: &mut Artifacts) -> Result<Value, CliError> {
        let data =
            self.samples().map_err(|e| CliError::Unreadable { path: self.data.display().to_string(), message: e })?;
        let fit = run_fit(self.model, &data, self.init.as_deref())?;
        let rows: Vec<Vec<String>> = data
            .iter()
            .map(|s| {
                let m = fit.predict(s.x);
                vec![fmt_f64(s.x), fmt_f64(s.y), fmt_f64(s.sigma), fmt_f64(m), fmt_f64(s.y - m)]
            })
            .collect();
        out.text("fit_curve.csv", csv_table(&["x", "y", "sigma", "model", "residual"], rows));
        out.json("fit.json", &fit)?;
        Ok(json!({
            "params": json(&fit.params),
            "derived": json(&fit.derived),
            "chi2_reduced": fit.chi2_reduced,
            "converged": fit.converged,
            "warnings": json(&fit.warnings),
        }))
    }

    fn plot(&self) -> String {
        "set datafile separator \",\"\nset xlabel \"x\"\nset ylabel \"y\"\n\
         plot \"fit_curve.csv\" using 1:2:3 skip 1 with yerrorbars title \"data\", \\\n     \
         \"\" using 1:4 skip 1 with lines title \"fit\"\n"
            .to_string()
    }
}
