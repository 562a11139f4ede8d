//! Config loading: JSON text to a typed, validated experiment.
//!
//! A config is one JSON object. The reserved keys `command`, `seed` and
//! `output_dir` are shared by every subcommand; all other keys belong to the
//! subcommand and unknown keys are rejected. An archived `run.json` is also
//! accepted, in which case its `config` member is used.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::error::{CliError, Issue};

/// Problems found while checking a config.
#[derive(Debug, Default)]
pub struct Issues(pub Vec<Issue>);

impl Issues {
    pub fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Issue { path: path.into(), message: message.into() });
    }

    pub fn positive(&mut self, path: &str, v: f64) {
        if !(v.is_finite() && v > 0.0) {
            self.push(path, format!("must be positive and finite, got {v}"));
        }
    }

    pub fn non_negative(&mut self, path: &str, v: f64) {
        if !(v.is_finite() && v >= 0.0) {
            self.push(path, format!("must be non-negative and finite, got {v}"));
        }
    }

    pub fn finite(&mut self, path: &str, v: f64) {
        if !v.is_finite() {
            self.push(path, format!("must be finite, got {v}"));
        }
    }

    pub fn probability(&mut self, path: &str, v: f64) {
        if !(0.0..=1.0).contains(&v) {
            self.push(path, format!("must lie in [0, 1], got {v}"));
        }
    }

    pub fn at_least(&mut self, path: &str, v: usize, min: usize) {
        if v < min {
            self.push(path, format!("must be at least {min}, got {v}"));
        }
    }

    /// Records a failed library-level validation against `path`.
    pub fn core<T>(&mut self, path: &str, r: echomem::Result<T>) {
        if let Err(e) = r {
            self.push(path, e.to_string());
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Evenly spaced sweep, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Range {
    pub fn new(start: f64, stop: f64, points: usize) -> Self {
        Self { start, stop, points }
    }

    pub fn values(&self) -> Vec<f64> {
        echomem::rffield::linspace(self.start, self.stop, self.points)
    }

    pub fn check(&self, path: &str, issues: &mut Issues) {
        issues.finite(&format!("{path}/start"), self.start);
        issues.finite(&format!("{path}/stop"), self.stop);
        issues.at_least(&format!("{path}/points"), self.points, 1);
        if self.points > 1 && !(self.stop > self.start) {
            issues.push(format!("{path}/stop"), "must exceed start");
        }
    }
}

/// Config after the reserved keys have been split off.
pub struct Loaded<E> {
    pub experiment: E,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

pub trait Check {
    fn check(&self, issues: &mut Issues);

    /// Makes relative input paths absolute. Runs before [`Check::check`].
    fn resolve_paths(&mut self, _base: &Path) {}
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Unreadable { path: path.display().to_string(), message: e.to_string() })?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Schema(vec![Issue { path: String::new(), message: format!("invalid JSON: {e}") }]))?;
    // an archived run record carries its resolved config
    if let Some(obj) = value.as_object() {
        if obj.get("tool").and_then(Value::as_str) == Some("echomem") {
            if let Some(cfg) = obj.get("config") {
                return Ok(cfg.clone());
            }
        }
    }
    Ok(value)
}

/// The `command` member, if present.
pub fn declared_command(value: &Value) -> Option<&str> {
    value.get("command").and_then(Value::as_str)
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        let token = match seg {
            Segment::Seq { index } => index.to_string(),
            Segment::Map { key } => key.clone(),
            Segment::Enum { variant } => variant.clone(),
            Segment::Unknown => continue,
        };
        out.push('/');
        out.push_str(&token.replace('~', "~0").replace('/', "~1"));
    }
    out
}

/// Splits off the reserved keys and deserializes the rest as `E`, then
/// runs the semantic checks. All problems are returned together when
/// deserialization succeeds; a type error stops at the first one.
pub fn parse<E: DeserializeOwned + Check>(value: Value, name: &str, base_dir: &Path) -> Result<Loaded<E>, CliError> {
    let mut issues = Issues::default();
    let Value::Object(mut obj) = value else {
        return Err(CliError::Schema(vec![Issue {
            path: String::new(),
            message: "config must be a JSON object".into(),
        }]));
    };
    match obj.remove("command") {
        None => {}
        Some(Value::String(c)) if c == name => {}
        Some(other) => issues.push("/command", format!("config is for {other}, not {name}")),
    }
    let seed = match obj.remove("seed") {
        None | Some(Value::Null) => None,
        Some(v) => match v.as_u64() {
            Some(s) => Some(s),
            None => {
                issues.push("/seed", "must be a non-negative integer");
                None
            }
        },
    };
    let output_dir = match obj.remove("output_dir") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => {
            issues.push("/output_dir", "must be a string");
            None
        }
    };
    let parsed: Result<E, _> = serde_path_to_error::deserialize(Value::Object(obj));
    let mut experiment = match parsed {
        Ok(e) => e,
        Err(err) => {
            let path = pointer(err.path());
            issues.push(path, err.into_inner().to_string());
            return Err(CliError::Schema(issues.0));
        }
    };
    experiment.resolve_paths(base_dir);
    experiment.check(&mut issues);
    if !issues.is_empty() {
        return Err(CliError::Schema(issues.0));
    }
    Ok(Loaded { experiment, seed, output_dir })
}

/// The config as it will be echoed into the run record: every default
/// filled in, plus the command and effective seed.
pub fn resolved<E: serde::Serialize>(experiment: &E, name: &str, seed: u64) -> Value {
    let mut obj = match serde_json::to_value(experiment) {
        Ok(Value::Object(m)) => m,
        _ => Map::new(),
    };
    obj.insert("command".into(), Value::String(name.into()));
    obj.insert("seed".into(), Value::from(seed));
    Value::Object(obj)
}
