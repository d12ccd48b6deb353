//! Output files and the run manifest.
//!
//! An invocation writes `<experiment>.csv` (long format), `<experiment>.json`
//! (summary) and `manifest.json` into the output directory. Data files
//! contain nothing run-dependent beyond the configuration, so replaying a
//! manifest reproduces them byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Format};
use crate::error::{HarnessError, Result};
use crate::experiments::ExperimentReport;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// The effective configuration, including any `--seed` override.
    pub config: ExperimentConfig,
    pub strict: bool,
    pub workers: usize,
    pub pass: bool,
    pub thresholds: serde_json::Value,
    pub wall_clock_seconds: f64,
    pub divergences: usize,
    pub diverged_trials: Vec<u64>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::unreadable(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileEntry> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| HarnessError::io(&path, e))?;
    Ok(FileEntry {
        path: name.to_string(),
        sha256: sha256_hex(bytes),
        bytes: bytes.len() as u64,
    })
}

pub fn csv_bytes(report: &ExperimentReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(vec![]);
    // Header even when there are no rows.
    w.write_record(["t", "statistic", "estimate", "stderr"])?;
    for row in &report.rows {
        w.write_record([
            row.t.to_string(),
            row.statistic.clone(),
            row.estimate.to_string(),
            row.stderr.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))
}

pub fn json_bytes(report: &ExperimentReport) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(report)?;
    v.push(b'\n');
    Ok(v)
}

/// Everything needed to write one invocation's outputs.
pub struct Invocation<'a> {
    pub config: &'a ExperimentConfig,
    pub report: &'a ExperimentReport,
    pub strict: bool,
    pub workers: usize,
    pub wall_clock_seconds: f64,
}

/// Write the data files and the manifest into `dir`.
pub fn write_outputs(dir: &Path, inv: &Invocation<'_>) -> Result<RunManifest> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let stem = inv.report.experiment.as_str();
    let mut files = vec![];
    for format in &inv.config.output.formats {
        files.push(match format {
            Format::Csv => write_file(dir, &format!("{stem}.csv"), &csv_bytes(inv.report)?)?,
            Format::Json => write_file(dir, &format!("{stem}.json"), &json_bytes(inv.report)?)?,
        });
    }
    let manifest = RunManifest {
        command: stem.to_string(),
        version: VERSION.to_string(),
        config: inv.config.clone(),
        strict: inv.strict,
        workers: inv.workers,
        pass: inv.report.pass,
        thresholds: serde_json::to_value(&inv.report.thresholds)?,
        wall_clock_seconds: inv.wall_clock_seconds,
        divergences: inv.report.divergences,
        diverged_trials: inv.report.diverged_trials.clone(),
        files,
    };
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(manifest)
}

/// Files whose content no longer matches the manifest.
pub fn verify(manifest: &RunManifest, dir: &Path) -> Vec<PathBuf> {
    manifest
        .files
        .iter()
        .filter(|f| {
            let path = dir.join(&f.path);
            fs::read(&path).map(|b| sha256_hex(&b) != f.sha256).unwrap_or(true)
        })
        .map(|f| dir.join(&f.path))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_known_strings() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
