//! Rendering a previous run from its manifest.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{HarnessError, Result};
use crate::output::{verify, RunManifest};

#[derive(Debug, Deserialize)]
struct LongRow {
    t: f64,
    statistic: String,
    estimate: f64,
    stderr: f64,
}

#[derive(Debug)]
pub struct Rendered {
    pub summary: String,
    /// Data files whose hash differs from the manifest.
    pub tampered: Vec<PathBuf>,
    pub written: Vec<PathBuf>,
}

/// Pivot a long CSV into one row per time and two columns (estimate,
/// stderr) per statistic, in order of first appearance.
pub fn pivot(long_csv: &[u8]) -> Result<Vec<u8>> {
    let mut reader = csv::Reader::from_reader(long_csv);
    let mut stats: Vec<String> = vec![];
    let mut times: Vec<f64> = vec![];
    let mut cells: HashMap<(usize, usize), (f64, f64)> = HashMap::new();
    for row in reader.deserialize::<LongRow>() {
        let row = row?;
        let s = match stats.iter().position(|s| *s == row.statistic) {
            Some(i) => i,
            None => {
                stats.push(row.statistic.clone());
                stats.len() - 1
            }
        };
        let t = match times.iter().position(|&t| t.to_bits() == row.t.to_bits()) {
            Some(i) => i,
            None => {
                times.push(row.t);
                times.len() - 1
            }
        };
        cells.insert((t, s), (row.estimate, row.stderr));
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let mut w = csv::Writer::from_writer(vec![]);
    let mut header = vec!["t".to_string()];
    for s in &stats {
        header.push(s.clone());
        header.push(format!("{s}_stderr"));
    }
    w.write_record(&header)?;
    for &ti in &order {
        let mut rec = vec![times[ti].to_string()];
        for si in 0..stats.len() {
            match cells.get(&(ti, si)) {
                Some((e, se)) => {
                    rec.push(e.to_string());
                    rec.push(se.to_string());
                }
                None => {
                    rec.push(String::new());
                    rec.push(String::new());
                }
            }
        }
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))
}

/// Verify the manifest's files, write `report.txt` and wide CSVs into
/// `out_dir` and return the summary text.
pub fn render(manifest_path: &Path, out_dir: Option<&Path>) -> Result<Rendered> {
    let manifest = RunManifest::load(manifest_path)?;
    let data_dir = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let out_dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| data_dir.clone());
    fs::create_dir_all(&out_dir).map_err(|e| HarnessError::io(&out_dir, e))?;
    let tampered = verify(&manifest, &data_dir);

    let mut s = String::new();
    let _ = writeln!(s, "experiment: {}", manifest.command);
    let _ = writeln!(s, "version: {}", manifest.version);
    let _ = writeln!(s, "result: {}", if manifest.pass { "PASS" } else { "FAIL" });
    let _ = writeln!(s, "seed: {}", manifest.config.monte_carlo.seed);
    let _ = writeln!(s, "trials: {}", manifest.config.monte_carlo.trials);
    let _ = writeln!(s, "wall clock: {:.2} s on {} workers", manifest.wall_clock_seconds, manifest.workers);
    let _ = writeln!(s, "diverged runs: {}", manifest.divergences);
    if let Some(list) = manifest.thresholds.as_array() {
        for t in list {
            let get = |k: &str| t.get(k).map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "thresholds [{}]: lambda {} particle {} noise {} mean-field {} chaos {}",
                t.get("label").and_then(|v| v.as_str()).unwrap_or(""),
                get("lambda"),
                get("particle_threshold"),
                get("noise_threshold"),
                get("meanfield_threshold"),
                get("chaos_threshold"),
            );
        }
    }

    let mut written = vec![];
    for entry in &manifest.files {
        let path = data_dir.join(&entry.path);
        let Ok(bytes) = fs::read(&path) else { continue };
        if entry.path.ends_with(".csv") {
            let wide = pivot(&bytes)?;
            let name = entry.path.trim_end_matches(".csv").to_string() + "_wide.csv";
            let target = out_dir.join(name);
            fs::write(&target, wide).map_err(|e| HarnessError::io(&target, e))?;
            written.push(target);
        } else if entry.path.ends_with(".json") {
            let v: serde_json::Value = serde_json::from_slice(&bytes)?;
            if let Some(warnings) = v.get("warnings").and_then(|w| w.as_array()) {
                for w in warnings {
                    let _ = writeln!(s, "warning: {}", w.as_str().unwrap_or_default());
                }
            }
            if let Some(checks) = v.get("checks").and_then(|c| c.as_array()) {
                for c in checks {
                    let pass = c.get("pass").and_then(|p| p.as_bool()).unwrap_or(false);
                    let _ = writeln!(
                        s,
                        "[{}] {}: estimate {} (se {}) vs {}",
                        if pass { "ok" } else { "FAIL" },
                        c.get("name").and_then(|n| n.as_str()).unwrap_or(""),
                        c.get("estimate").map(|v| v.to_string()).unwrap_or_default(),
                        c.get("stderr").map(|v| v.to_string()).unwrap_or_default(),
                        c.get("bound").map(|v| v.to_string()).unwrap_or_default(),
                    );
                }
            }
        }
    }
    for t in &tampered {
        let _ = writeln!(s, "hash mismatch: {}", t.display());
    }
    let target = out_dir.join("report.txt");
    fs::write(&target, &s).map_err(|e| HarnessError::io(&target, e))?;
    written.push(target);
    Ok(Rendered {
        summary: s,
        tampered,
        written,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pivot_groups_by_time_and_statistic() {
        let long = b"t,statistic,estimate,stderr\n0,a,1,0.1\n0,b,2,0.2\n1,a,3,0.3\n";
        let wide = String::from_utf8(pivot(long).unwrap()).unwrap();
        assert_eq!(wide, "t,a,a_stderr,b,b_stderr\n0,1,0.1,2,0.2\n1,3,0.3,,\n");
    }
}
