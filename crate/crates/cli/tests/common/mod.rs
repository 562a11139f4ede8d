#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn echomem() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_echomem"));
    c.env_remove("ECHOMEM_OUT").env("SOURCE_DATE_EPOCH", "1700000000");
    c
}

pub fn write_json(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

/// Runs `echomem <cmd> --config <cfg> --out <out> [extra]`.
pub fn run(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    echomem().arg(cmd).arg("--config").arg(cfg).arg("--out").arg(out).args(extra).output().unwrap()
}

pub fn ok(o: &Output) -> Value {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
    serde_json::from_slice(&o.stdout).unwrap()
}

pub fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("stderr: {}", String::from_utf8_lossy(&o.stderr)))
}

/// Header and rows of a CSV artifact, as strings.
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

pub fn column(path: &Path, name: &str) -> Vec<f64> {
    let (h, rows) = read_csv(path);
    let k = h.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name} in {h:?}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

/// Every file in a directory, by name.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Noise-free exponential decay samples for the fit command.
pub fn decay_csv(dir: &Path, points: usize) -> PathBuf {
    let mut s = String::from("t,eff,err\n");
    for k in 0..points {
        let t = 5e-6 + 10e-6 * k as f64;
        s.push_str(&format!("{t},{},{}\n", 0.3 * (-t / 42e-6).exp(), 0.003));
    }
    let p = dir.join("decay.csv");
    fs::write(&p, s).unwrap();
    p
}
