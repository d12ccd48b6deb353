use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use cbo_harness::config::ExperimentKind;
use cbo_harness::invoke::{self, Flags};
use cbo_harness::{report, HarnessError};
use clap::{Args, Parser, Subcommand};

/// Run verification experiments for the regularized CBO particle system.
#[derive(Parser)]
#[command(name = "cbo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration, or the manifest.json of a previous run.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override monte_carlo.seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "COUNT", env = "CBO_WORKERS")]
    workers: Option<usize>,
    /// Override output.dir.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Abort with status 2 when the governing threshold condition fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Trial-averaged diagnostics of a plain run.
    Simulate(Common),
    /// Pairwise decay rate against the particle threshold.
    Decay(Common),
    /// Coupling gap and Wasserstein distance along an N-ladder.
    Chaos(Common),
    /// Laplace gap along an alpha ladder.
    Laplace(Common),
    /// Variance decay and consensus location of the large-ensemble proxy.
    Meanfield(Common),
    /// The decay experiment for each noise model.
    NoiseVariants(Common),
    /// Excursion frequencies over thresholds A and sizes N.
    Concentration(Common),
    /// Print the threshold report for a config without running it.
    Thresholds {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
    /// Render a previous run's manifest into a summary and wide CSVs.
    Report {
        /// manifest.json of the run.
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Directory for the rendered files (default: next to the manifest).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

const FAIL: u8 = 1;
const CONFIG: u8 = 2;

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let (kind, common) = match cli.command {
        Command::Thresholds { config } => {
            let reports = invoke::thresholds(&config)?;
            println!("{}", serde_json::to_string_pretty(&reports)?);
            for r in &reports {
                for v in r.report.violations() {
                    eprintln!("unsatisfied [{}]: {v}", r.label);
                }
            }
            return Ok(ExitCode::SUCCESS);
        }
        Command::Report { config, out } => {
            let rendered = report::render(&config, out.as_deref())?;
            print!("{}", rendered.summary);
            return Ok(if rendered.tampered.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(FAIL)
            });
        }
        Command::Simulate(c) => (ExperimentKind::Simulate, c),
        Command::Decay(c) => (ExperimentKind::Decay, c),
        Command::Chaos(c) => (ExperimentKind::Chaos, c),
        Command::Laplace(c) => (ExperimentKind::Laplace, c),
        Command::Meanfield(c) => (ExperimentKind::Meanfield, c),
        Command::NoiseVariants(c) => (ExperimentKind::NoiseVariants, c),
        Command::Concentration(c) => (ExperimentKind::Concentration, c),
    };
    let flags = Flags {
        seed: common.seed,
        workers: common.workers,
        out: common.out,
        strict: common.strict,
    };
    let done = invoke::run_experiment(kind, &common.config, &flags)
        .with_context(|| format!("{} experiment", kind.name()))?;
    let r = &done.report;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    for c in r.failed_checks() {
        eprintln!("failed: {} (estimate {}, se {}, bound {})", c.name, c.estimate, c.stderr, c.bound);
    }
    println!(
        "{}: {} ({} checks, {} diverged runs) -> {}",
        r.experiment,
        if r.pass { "PASS" } else { "FAIL" },
        r.checks.len(),
        r.divergences,
        done.out_dir.display()
    );
    Ok(if r.pass { ExitCode::SUCCESS } else { ExitCode::from(FAIL) })
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let config_class = err.downcast_ref::<HarnessError>().is_some_and(HarnessError::is_config);
            ExitCode::from(if config_class { CONFIG } else { FAIL })
        }
    }
}
