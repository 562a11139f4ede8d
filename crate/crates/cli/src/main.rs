//! `echomem`: run memory experiments from JSON configs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use commands::dd_bench::DdBench;
use commands::echo_decay::EchoDecay;
use commands::fidelity::Fidelity;
use commands::fit::Fit;
use commands::holeburn::Holeburn;
use commands::rf_map::RfMap;
use commands::snr::SnrRun;
use commands::Experiment;
use config::{declared_command, parse, read_json, resolved};
use error::{CliError, Issue};
use output::{digest_file, resolve_out_dir, timestamp, Artifacts, OutputDir, RunRecord, SCHEMA_VERSION};

#[derive(Debug, Parser)]
#[command(name = "echomem", version, about = "Spin-wave echo memory simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Echo efficiency against storage timing.
    EchoDecay(RunArgs),
    /// Residual population of decoupling blocks under pulse errors.
    DdBench(RunArgs),
    /// Storage fidelities against the classical bound.
    Fidelity(RunArgs),
    /// Absorption profile after optical pumping.
    Holeburn(RunArgs),
    /// RF field and Rabi maps of the electrode layout.
    RfMap(RunArgs),
    /// Fit a decay, nutation or line-shape model to CSV data.
    Fit(RunArgs),
    /// Signal-to-noise ratio and count histogram.
    Snr(RunArgs),
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON config, or a run.json from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overwrite a non-empty output directory.
    #[arg(long)]
    force: bool,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Also write a gnuplot script.
    #[arg(long)]
    plot: bool,
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().filter(|p| !p.as_os_str().is_empty()).map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

fn execute<E: Experiment>(args: &RunArgs) -> Result<Value, CliError> {
    let value = read_json(&args.config)?;
    let loaded = parse::<E>(value, E::NAME, &base_dir(&args.config))?;
    let seed = args.seed.or(loaded.seed).unwrap_or(0);
    let out_dir = resolve_out_dir(args.out.as_deref(), loaded.output_dir.as_deref(), E::NAME);
    let dir = OutputDir::acquire(&out_dir, args.force)?;

    let experiment = &loaded.experiment;
    let mut artifacts = Artifacts::default();
    let results = match args.threads {
        Some(n) => echomem::par::with_threads(n, || experiment.run(seed, &mut artifacts)),
        None => experiment.run(seed, &mut artifacts),
    }?;
    if args.plot {
        artifacts.text("plot.gp", experiment.plot());
    }
    let inputs = experiment.inputs().iter().map(|p| digest_file(p)).collect::<Result<Vec<_>, _>>()?;
    let record = RunRecord {
        tool: "echomem",
        version: env!("CARGO_PKG_VERSION"),
        schema_version: SCHEMA_VERSION,
        command: E::NAME.to_string(),
        timestamp_unix: timestamp(),
        config: resolved(experiment, E::NAME, seed),
        inputs,
        outputs: Vec::new(),
        results: results.clone(),
    };
    let outputs = dir.commit(artifacts, record)?;
    Ok(json!({
        "status": "ok",
        "command": E::NAME,
        "out_dir": dir.path().display().to_string(),
        "outputs": outputs,
        "results": results,
    }))
}

fn check<E: Experiment>(value: Value, base: &Path) -> Vec<Issue> {
    match parse::<E>(value, E::NAME, base) {
        Ok(_) => Vec::new(),
        Err(CliError::Schema(issues)) => issues,
        Err(e) => vec![Issue { path: String::new(), message: e.to_string() }],
    }
}

const COMMANDS: [&str; 7] = ["echo-decay", "dd-bench", "fidelity", "holeburn", "rf-map", "fit", "snr"];

/// Report for `validate`; the config must name its command.
fn validate(path: &Path) -> Result<(bool, Value), CliError> {
    let value = read_json(path)?;
    let base = base_dir(path);
    let name = declared_command(&value).map(str::to_string);
    let issues = match name.as_deref() {
        Some("echo-decay") => check::<EchoDecay>(value, &base),
        Some("dd-bench") => check::<DdBench>(value, &base),
        Some("fidelity") => check::<Fidelity>(value, &base),
        Some("holeburn") => check::<Holeburn>(value, &base),
        Some("rf-map") => check::<RfMap>(value, &base),
        Some("fit") => check::<Fit>(value, &base),
        Some("snr") => check::<SnrRun>(value, &base),
        Some(other) => vec![Issue {
            path: "/command".into(),
            message: format!("unknown command {other:?}; expected one of {}", COMMANDS.join(", ")),
        }],
        None => vec![Issue {
            path: "/command".into(),
            message: format!("missing; expected one of {}", COMMANDS.join(", ")),
        }],
    };
    let valid = issues.is_empty();
    Ok((valid, json!({ "valid": valid, "command": name, "errors": issues })))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::EchoDecay(a) => execute::<EchoDecay>(a),
        Command::DdBench(a) => execute::<DdBench>(a),
        Command::Fidelity(a) => execute::<Fidelity>(a),
        Command::Holeburn(a) => execute::<Holeburn>(a),
        Command::RfMap(a) => execute::<RfMap>(a),
        Command::Fit(a) => execute::<Fit>(a),
        Command::Snr(a) => execute::<SnrRun>(a),
        Command::Validate { config } => match validate(config) {
            Ok((valid, report)) => {
                print_json(&report);
                return if valid { ExitCode::SUCCESS } else { ExitCode::from(2) };
            }
            Err(e) => Err(e),
        },
    };
    match outcome {
        Ok(summary) => {
            print_json(&summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", serde_json::to_string_pretty(&e.to_json()).unwrap_or_default());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
