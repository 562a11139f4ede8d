mod common;

use std::fs;

use common::*;
use serde_json::json;

fn delta() -> serde_json::Value {
    json!({"kind": "gaussian", "gauss_fwhm": 0.0, "lorentz_fwhm": 0.0, "center": 0.0})
}

#[test]
fn fidelity_table_totals() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(
        tmp.path(),
        "f.json",
        &json!({
            "command": "fidelity",
            "measured": [
                {"mu_q": 0.66, "f_e": 0.907, "f_l": 0.908, "f_plus": 0.842, "f_plus_i": 0.833},
                {"mu_q": 1.07, "f_e": 0.924, "f_l": 0.938, "f_plus": 0.877, "f_plus_i": 0.883},
                {"mu_q": 4.21, "f_e": 0.986, "f_l": 0.982, "f_plus": 0.975, "f_plus_i": 0.972}
            ]
        }),
    );
    let out = tmp.path().join("out");
    ok(&run("fidelity", &cfg, &out, &[]));
    let totals = column(&out.join("fidelity_table.csv"), "f_total");
    for (got, want) in totals.iter().zip([0.861, 0.897, 0.977]) {
        assert!((got - want).abs() < 1e-3, "{got} vs {want}");
    }
    let (_, rows) = read_csv(&out.join("fidelity_table.csv"));
    assert!(rows.iter().all(|r| r[10] == "quantum"));
}

#[test]
fn fidelity_from_simulated_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(
        tmp.path(),
        "f.json",
        &json!({"command": "fidelity", "measured": [], "simulate": {"mu_q": [1.07], "repetitions": 200000}}),
    );
    let out = tmp.path().join("out");
    ok(&run("fidelity", &cfg, &out, &[]));
    let (_, rows) = read_csv(&out.join("fidelity_table.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "simulated");
    let f_t: f64 = rows[0][6].parse().unwrap();
    assert!(f_t > 0.8 && f_t < 1.0, "{f_t}");
}

#[test]
fn echo_decay_flat_without_broadening() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(
        tmp.path(),
        "e.json",
        &json!({
            "command": "echo-decay",
            "medium": {"optical": delta(), "spin": delta(), "excited": delta(),
                       "optical_decoherence": 0.0, "optical_depth": 2.09, "eta_control": 0.85},
            "sweep": {"axis": "t42", "range": {"start": 12e-6, "stop": 60e-6, "points": 7}},
            "ions": 2000
        }),
    );
    let out = tmp.path().join("out");
    ok(&run("echo-decay", &cfg, &out, &[]));
    let eff = column(&out.join("echo_decay.csv"), "efficiency");
    assert_eq!(eff.len(), 7);
    for e in &eff {
        assert!((e - eff[0]).abs() <= 1e-12 * eff[0], "{eff:?}");
    }
    let model = column(&out.join("echo_decay.csv"), "model_efficiency");
    assert!((eff[0] - model[0]).abs() < 1e-3 * model[0]);
}

#[test]
fn dd_bench_xx_matches_sin_squared() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(tmp.path(), "d.json", &json!({"command": "dd-bench", "sequences": ["xx"], "ions": 4000}));
    let out = tmp.path().join("out");
    ok(&run("dd-bench", &cfg, &out, &[]));
    let p = out.join("dd_bench.csv");
    let delta = column(&p, "angle_error_rad");
    let res = column(&p, "residual_population");
    assert_eq!(delta.len(), 6);
    assert!((delta[5] - 0.1 * std::f64::consts::PI).abs() < 1e-12);
    for (d, r) in delta.iter().zip(&res) {
        let want = d.sin().powi(2);
        assert!((r - want).abs() < 1e-6, "delta {d}: {r} vs {want}");
    }
}

#[test]
fn holeburn_and_rf_map_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let hb = write_json(tmp.path(), "h.json", &json!({"command": "holeburn"}));
    let s = ok(&run("holeburn", &hb, &tmp.path().join("h"), &[]));
    let frac = s["results"]["window_residual_fraction"].as_f64().unwrap();
    let fwhm = s["results"]["feature_fwhm_hz"].as_f64().unwrap();
    assert!(frac < 0.05, "{frac}");
    assert!((fwhm - 1.8e6).abs() < 0.2e6, "{fwhm}");

    let rf = write_json(tmp.path(), "r.json", &json!({"command": "rf-map"}));
    let s = ok(&run("rf-map", &rf, &tmp.path().join("r"), &[]));
    let rel = s["results"]["homogeneity"]["relative_std"].as_f64().unwrap();
    assert!(rel > 0.0 && rel < 0.1, "{rel}");
    // sqrt(16 W / 4 W) times the calibration point
    let center = s["results"]["center_rabi_hz"].as_f64().unwrap();
    assert!((center - 33.4e3).abs() < 1.0, "{center}");
    let (h, _) = read_csv(&tmp.path().join("r/field_map.csv"));
    assert_eq!(h, ["x_m", "depth_m", "bx", "bz", "abs_b"]);
}

#[test]
fn snr_histogram_means() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(tmp.path(), "s.json", &json!({"command": "snr", "repetitions": 200000}));
    let s = ok(&run("snr", &cfg, &tmp.path().join("o"), &[]));
    let snr = s["results"]["snr"]["value"].as_f64().unwrap();
    assert!((snr - 1.07 * 0.12 / 0.0098).abs() < 1e-9);
    let exp = s["results"]["expected_clicks_per_bin"].as_array().unwrap();
    let got = s["results"]["measured_clicks_per_bin"].as_array().unwrap();
    assert_eq!(exp.len(), 3);
    for (e, g) in exp.iter().zip(got) {
        let (e, g) = (e.as_f64().unwrap(), g.as_f64().unwrap());
        let sd = (e / 200000.0).sqrt();
        assert!((e - g).abs() < 5.0 * sd, "{e} vs {g}");
    }
}

#[test]
fn fit_recovers_lifetime() {
    let tmp = tempfile::tempdir().unwrap();
    decay_csv(tmp.path(), 12);
    let cfg = write_json(
        tmp.path(),
        "fit.json",
        &json!({"command": "fit", "data": "decay.csv", "x_column": "t", "y_column": "eff",
                "sigma_column": "err", "model": {"family": "decay", "variant": "exp_only"}}),
    );
    let out = tmp.path().join("out");
    ok(&run("fit", &cfg, &out, &[]));
    let fit: serde_json::Value = serde_json::from_slice(&fs::read(out.join("fit.json")).unwrap()).unwrap();
    let lifetime = fit["params"][1]["value"].as_f64().unwrap();
    assert!((lifetime - 42e-6).abs() < 1e-9, "{lifetime}");
    let res = column(&out.join("fit_curve.csv"), "residual");
    assert!(res.iter().all(|r| r.abs() < 1e-9));
    let record: serde_json::Value = serde_json::from_slice(&fs::read(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(record["inputs"].as_array().unwrap().len(), 1);
}

#[test]
fn numeric_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    decay_csv(tmp.path(), 2);
    let cfg = write_json(
        tmp.path(),
        "fit.json",
        &json!({"command": "fit", "data": "decay.csv", "x_column": "t", "y_column": "eff",
                "model": {"family": "decay", "variant": "exp_only"}}),
    );
    let o = run("fit", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3));
    let e = stderr_json(&o);
    assert_eq!(e["kind"], "numeric");
    assert_eq!(e["exit_code"], 3);
}

#[test]
fn schema_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(tmp.path(), "s.json", &json!({"command": "snr", "mu_q": "lots"}));
    let o = run("snr", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["kind"], "schema");
    assert_eq!(e["issues"][0]["path"], "/mu_q");
    assert!(!tmp.path().join("out").exists());

    let cfg = write_json(tmp.path(), "u.json", &json!({"command": "snr", "mu": 1.0}));
    assert_eq!(run("snr", &cfg, &tmp.path().join("out"), &[]).status.code(), Some(2));

    let cfg = write_json(tmp.path(), "w.json", &json!({"command": "fidelity"}));
    let o = run("snr", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["issues"][0]["path"], "/command");

    let o = run("snr", &tmp.path().join("missing.json"), &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_reports_pointers() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write_json(tmp.path(), "g.json", &json!({"command": "echo-decay"}));
    let o = echomem().args(["validate", "--config"]).arg(&good).output().unwrap();
    let v = ok(&o);
    assert_eq!(v["valid"], true);
    assert_eq!(v["errors"].as_array().unwrap().len(), 0);

    let neg = write_json(
        tmp.path(),
        "n.json",
        &json!({"command": "echo-decay", "timing": {"t31": 40e-6, "t42": 25e-6, "spin_storage": -1e-6}}),
    );
    let o = echomem().args(["validate", "--config"]).arg(&neg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let errs = v["errors"].as_array().unwrap();
    assert_eq!(errs.len(), 1, "{errs:?}");
    assert_eq!(errs[0]["path"], "/timing/spin_storage");

    let dd = write_json(
        tmp.path(),
        "dd.json",
        &json!({"command": "echo-decay", "dd": {"sequence": "xy4", "block_duration": 240e-6}}),
    );
    let o = echomem().args(["validate", "--config"]).arg(&dd).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["errors"][0]["path"], "/dd/block_duration");
    assert!(v["errors"][0]["message"].as_str().unwrap().contains("spin storage"), "{v}");

    let o = echomem().args(["validate", "--config"]).arg(tmp.path().join("none.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    // validation touches nothing
    let names: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 3);
}

#[test]
fn refuses_to_overwrite_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(tmp.path(), "s.json", &json!({"command": "snr", "repetitions": 1000}));
    let out = tmp.path().join("out");
    ok(&run("snr", &cfg, &out, &[]));
    let o = run("snr", &cfg, &out, &["--seed", "9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("--force"));
    let s = ok(&run("snr", &cfg, &out, &["--seed", "9", "--force"]));
    assert_eq!(s["status"], "ok");
    let record: serde_json::Value = serde_json::from_slice(&fs::read(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(record["config"]["seed"], 9);
    assert!(!out.join(".echomem.lock").exists());
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(tmp.path(), "s.json", &json!({"command": "snr", "repetitions": 100}));
    let root = tmp.path().join("root");
    let o = echomem()
        .current_dir(tmp.path())
        .env("ECHOMEM_OUT", &root)
        .args(["snr", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    ok(&o);
    assert!(root.join("snr/run.json").exists());
    assert!(root.join("snr/snr_histogram.csv").exists());

    let o = echomem().current_dir(tmp.path()).args(["snr", "--config"]).arg(&cfg).output().unwrap();
    ok(&o);
    assert!(tmp.path().join("echomem-out/snr/run.json").exists());
}

#[test]
fn plot_script_on_request() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(tmp.path(), "d.json", &json!({"command": "dd-bench", "ions": 100}));
    let out = tmp.path().join("out");
    let s = ok(&run("dd-bench", &cfg, &out, &["--plot"]));
    assert!(s["outputs"].as_array().unwrap().iter().any(|o| o == "plot.gp"));
    let gp = fs::read_to_string(out.join("plot.gp")).unwrap();
    assert!(gp.contains("dd_bench.csv"));
}

#[test]
fn run_record_digests_match() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(
        tmp.path(),
        "h.json",
        &json!({"command": "holeburn", "grid": {"min": -3e6, "max": 3e6, "points": 121}}),
    );
    let out = tmp.path().join("out");
    ok(&run("holeburn", &cfg, &out, &["--plot"]));
    let record: serde_json::Value = serde_json::from_slice(&fs::read(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(record["tool"], "echomem");
    assert_eq!(record["command"], "holeburn");
    assert_eq!(record["timestamp_unix"], 1700000000u64);
    assert!(record["version"].is_string() && record["schema_version"].is_u64());
    let outputs = record["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for o in outputs {
        let bytes = fs::read(out.join(o["path"].as_str().unwrap())).unwrap();
        assert_eq!(o["bytes"], bytes.len());
        let digest = std::process::Command::new("sha256sum").arg(out.join(o["path"].as_str().unwrap())).output();
        if let Ok(d) = digest {
            let text = String::from_utf8_lossy(&d.stdout);
            assert!(text.starts_with(o["sha256"].as_str().unwrap()), "{text}");
        }
    }
}

#[test]
fn rerun_from_record_is_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_json(
        tmp.path(),
        "e.json",
        &json!({"command": "echo-decay", "seed": 11, "ions": 5000,
                "sweep": {"axis": "spin_storage", "values": [20e-6, 30e-6, 40e-6]}}),
    );
    let first = tmp.path().join("a");
    ok(&run("echo-decay", &cfg, &first, &[]));
    let second = tmp.path().join("b");
    ok(&run("echo-decay", &first.join("run.json"), &second, &[]));
    assert_eq!(snapshot(&first), snapshot(&second));
}
