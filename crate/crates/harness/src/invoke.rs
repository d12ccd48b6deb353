//! Entry points shared by the `cbo` binary and the integration tests.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{config_err, Result};
use crate::experiments::{self, ExperimentReport, LabeledThresholds, RunOptions};
use crate::output::{write_outputs, Invocation, RunManifest};
use crate::trials::with_pool;

/// Flags common to every experiment subcommand.
#[derive(Debug, Clone, Default)]
pub struct Flags {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub strict: bool,
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Load a TOML config, or the config echoed by a previous run's manifest
/// (any `.json` path). Returns the manifest's strict flag as well.
pub fn load(path: &Path) -> Result<(ExperimentConfig, bool)> {
    if path.extension().is_some_and(|e| e == "json") {
        let manifest = RunManifest::load(path)?;
        manifest.config.validate()?;
        Ok((manifest.config, manifest.strict))
    } else {
        Ok((ExperimentConfig::load(path)?, false))
    }
}

/// Apply command-line overrides to a loaded configuration.
pub fn effective(mut config: ExperimentConfig, kind: ExperimentKind, flags: &Flags) -> Result<ExperimentConfig> {
    if config.experiment.kind != kind {
        return Err(config_err(format!(
            "config describes a {} experiment, not {}",
            config.experiment.kind.name(),
            kind.name()
        )));
    }
    if let Some(seed) = flags.seed {
        config.monte_carlo.seed = seed;
    }
    if let Some(out) = &flags.out {
        config.output.dir = out.clone();
    }
    Ok(config)
}

pub struct Completed {
    pub report: ExperimentReport,
    pub manifest: RunManifest,
    pub out_dir: PathBuf,
}

/// Run one experiment subcommand end to end and write its outputs.
pub fn run_experiment(kind: ExperimentKind, config_path: &Path, flags: &Flags) -> Result<Completed> {
    let (config, manifest_strict) = load(config_path)?;
    let config = effective(config, kind, flags)?;
    let strict = flags.strict || manifest_strict;
    let workers = flags.workers.unwrap_or_else(default_workers);
    let started = Instant::now();
    let report = with_pool(workers, || experiments::run(&config, RunOptions { strict }))??;
    let elapsed = started.elapsed().as_secs_f64();
    let out_dir = config.output.dir.clone();
    let manifest = write_outputs(
        &out_dir,
        &Invocation {
            config: &config,
            report: &report,
            strict,
            workers,
            wall_clock_seconds: elapsed,
        },
    )?;
    Ok(Completed {
        report,
        manifest,
        out_dir,
    })
}

/// The threshold reports a config would be checked against.
pub fn thresholds(config_path: &Path) -> Result<Vec<LabeledThresholds>> {
    let (config, _) = load(config_path)?;
    experiments::thresholds(&config)
}
