//! Output directories, artifacts and the run record.

use std::fs::{self, OpenOptions};
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Version of the CSV/JSON layouts written by this binary.
pub const SCHEMA_VERSION: u32 = 1;
pub const RECORD_FILE: &str = "run.json";
const LOCK_FILE: &str = ".echomem.lock";
/// Default output root when neither `--out` nor the config names one.
pub const OUT_ENV: &str = "ECHOMEM_OUT";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files produced by a run, kept in memory until the run succeeds.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn text(&mut self, name: &str, content: String) {
        self.files.push((name.to_string(), content.into_bytes()));
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
        s.push('\n');
        self.text(name, s);
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema_version: u32,
    pub command: String,
    /// Seconds since the epoch; taken from `SOURCE_DATE_EPOCH` when set.
    pub timestamp_unix: u64,
    pub config: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub results: Value,
}

pub fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()) {
        return t;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn digest_file(path: &Path) -> Result<FileDigest, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Unreadable { path: path.display().to_string(), message: e.to_string() })?;
    Ok(FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes), bytes: bytes.len() })
}

/// Output directory from, in order: the flag, the config, `$ECHOMEM_OUT/<command>`,
/// `./echomem-out/<command>`.
pub fn resolve_out_dir(flag: Option<&Path>, config: Option<&Path>, command: &str) -> PathBuf {
    if let Some(p) = flag.or(config) {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(command),
        _ => PathBuf::from("echomem-out").join(command),
    }
}

/// Exclusive hold on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputDir {
    path: PathBuf,
    lock: PathBuf,
}

impl OutputDir {
    /// Creates or reuses `path`. A non-empty directory is only reused with
    /// `force`; a directory locked by another run is never reused.
    pub fn acquire(path: &Path, force: bool) -> Result<Self, CliError> {
        let lock = path.join(LOCK_FILE);
        if path.exists() {
            if !path.is_dir() {
                return Err(CliError::Usage(format!("{} exists and is not a directory", path.display())));
            }
            if lock.exists() {
                return Err(CliError::Usage(format!("{} is locked by another run", path.display())));
            }
            let occupied = fs::read_dir(path)?.next().is_some();
            if occupied && !force {
                return Err(CliError::Usage(format!("{} is not empty; pass --force to overwrite", path.display())));
            }
        }
        fs::create_dir_all(path)?;
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => {}
            Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                return Err(CliError::Usage(format!("{} is locked by another run", path.display())));
            }
            Err(e) => return Err(e.into()),
        }
        Ok(Self { path: path.to_path_buf(), lock })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes every artifact, then the run record listing their digests.
    pub fn commit(&self, artifacts: Artifacts, mut record: RunRecord) -> Result<Vec<String>, CliError> {
        let mut written = Vec::new();
        for (name, bytes) in artifacts.files {
            fs::write(self.path.join(&name), &bytes)?;
            record.outputs.push(FileDigest { path: name.clone(), sha256: sha256_hex(&bytes), bytes: bytes.len() });
            written.push(name);
        }
        let mut text = serde_json::to_string_pretty(&record).map_err(|e| CliError::Usage(e.to_string()))?;
        text.push('\n');
        fs::write(self.path.join(RECORD_FILE), text)?;
        written.push(RECORD_FILE.to_string());
        Ok(written)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}
