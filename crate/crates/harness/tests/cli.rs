use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cbo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbo"))
        .args(args)
        .env("CBO_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn decay_toml(model: &str, n: usize, trials: usize) -> String {
    format!(
        r#"
[objective]
name = "rastrigin"
dim = 2

[model]
{model}

[ensemble]
n = {n}
init = {{ kind = "uniform", lower = [-3.0, -3.0], upper = [3.0, 3.0] }}

[monte_carlo]
trials = {trials}
seed = 1

[experiment]
kind = "decay"
"#
    )
}

const BELOW: &str = "lambda = 0.05\nsigma = 0.3\nalpha = 5.0\ndt = 0.01\nt_end = 1.0";
const ABOVE: &str = "sigma = 0.3\nalpha = 5.0\ndt = 0.01\nt_end = 3.0\nlambda_rule = { factor = 2.0, offset = 0.5 }";

#[test]
fn thresholds_reports_unmet_condition_without_failing() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "below.toml", &decay_toml(BELOW, 16, 2));
    let out = cbo(&["thresholds", "--config", s(&cfg)]);
    assert_eq!(code(&out), 0);
    let reports: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(reports[0]["satisfied"]["particle"], false);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unsatisfied"));
}

#[test]
fn strict_run_below_threshold_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "below.toml", &decay_toml(BELOW, 16, 2));
    let out_dir = dir.path().join("out");
    let out = cbo(&["decay", "--config", s(&cfg), "--strict", "--out", s(&out_dir)]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    // Without --strict the run goes ahead with a warning.
    let out = cbo(&["decay", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_ne!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn usage_and_input_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&cbo(&["decay", "--bogus"])), 2);
    assert_eq!(code(&cbo(&["frobnicate"])), 2);
    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&cbo(&["decay", "--config", s(&missing)])), 2);
    let typo = write(&dir, "typo.toml", &decay_toml(ABOVE, 16, 2).replace("sigma", "sigmaa"));
    assert_eq!(code(&cbo(&["decay", "--config", s(&typo)])), 2);
    let cfg = write(&dir, "decay.toml", &decay_toml(ABOVE, 16, 2));
    assert_eq!(code(&cbo(&["chaos", "--config", s(&cfg)])), 2, "kind mismatch");
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "decay.toml", &decay_toml(ABOVE, 16, 20));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    assert_eq!(code(&cbo(&["decay", "--config", s(&cfg), "--seed", "7", "--out", s(&a), "--workers", "1"])), 0);
    assert_eq!(code(&cbo(&["decay", "--config", s(&cfg), "--seed", "7", "--out", s(&b), "--workers", "4"])), 0);
    assert_eq!(code(&cbo(&["decay", "--config", s(&cfg), "--seed", "8", "--out", s(&c)])), 0);
    let csv = |d: &Path| fs::read(d.join("decay.csv")).unwrap();
    assert_eq!(csv(&a), csv(&b));
    assert_eq!(fs::read(a.join("decay.json")).unwrap(), fs::read(b.join("decay.json")).unwrap());
    assert_ne!(csv(&a), csv(&c));
    assert_eq!(json(&a.join("manifest.json"))["config"]["monte_carlo"]["seed"], 7);
}

#[test]
fn manifest_replay_reproduces_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "decay.toml", &decay_toml(ABOVE, 16, 10));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&cbo(&["decay", "--config", s(&cfg), "--out", s(&a)])), 0);
    let manifest = a.join("manifest.json");
    assert_eq!(code(&cbo(&["decay", "--config", s(&manifest), "--out", s(&b)])), 0);
    for f in ["decay.csv", "decay.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn report_renders_and_detects_tampering() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "decay.toml", &decay_toml(ABOVE, 16, 10));
    let run = dir.path().join("run");
    let rendered = dir.path().join("rendered");
    assert_eq!(code(&cbo(&["decay", "--config", s(&cfg), "--out", s(&run)])), 0);
    let manifest = run.join("manifest.json");
    let out = cbo(&["report", "--config", s(&manifest), "--out", s(&rendered)]);
    assert_eq!(code(&out), 0);
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("result: PASS"), "{summary}");
    assert!(rendered.join("report.txt").exists());
    let wide = fs::read_to_string(rendered.join("decay_wide.csv")).unwrap();
    assert!(wide.starts_with("t,pair_max,pair_max_stderr,consensus_max,consensus_max_stderr\n"));

    let mut csv = fs::read(run.join("decay.csv")).unwrap();
    csv.extend_from_slice(b"9,pair_max,0,0\n");
    fs::write(run.join("decay.csv"), csv).unwrap();
    let out = cbo(&["report", "--config", s(&manifest), "--out", s(&rendered)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("hash mismatch"));
}

#[test]
fn single_particle_decay_is_degenerate() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "one.toml", &decay_toml(ABOVE, 1, 3));
    let out_dir = dir.path().join("out");
    let out = cbo(&["decay", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out_dir.join("decay.json"));
    assert_eq!(report["degenerate"], true);
    assert!(report["details"]["note"].as_str().unwrap().contains("no pairs"));
}

#[test]
fn noiseless_unweighted_decay_matches_closed_form() {
    // sigma = 0 and alpha = 0: every pair contracts deterministically, so
    // |X_i - X_j|^2 decays at rate 2 ln(1 - lambda dt) / dt ~ -2 lambda.
    let dir = TempDir::new().unwrap();
    let model = "lambda = 1.0\nsigma = 0.0\nalpha = 0.0\ndt = 0.0005\nt_end = 1.0\nrecord_every = 20";
    let cfg = write(&dir, "plain.toml", &decay_toml(model, 8, 1));
    let out_dir = dir.path().join("out");
    assert_eq!(code(&cbo(&["decay", "--config", s(&cfg), "--out", s(&out_dir)])), 0);
    let rate = json(&out_dir.join("decay.json"))["details"]["pair_fit"]["rate"].as_f64().unwrap();
    assert!((rate + 2.0).abs() < 1e-3, "rate {rate}");
}

#[test]
fn chaos_rung_equal_to_reference_has_zero_gap() {
    let dir = TempDir::new().unwrap();
    let text = r#"
[objective]
name = "rastrigin"
dim = 1

[model]
sigma = 0.3
alpha = 5.0
dt = 0.01
t_end = 0.5
record_every = 10
q = 3.0
lambda_rule = { factor = 1.0, offset = 1.0 }

[ensemble]
n = 64
n_ref = 64
init = { kind = "uniform", lower = [-2.0], upper = [2.0] }

[monte_carlo]
trials = 3
seed = 2

[experiment]
kind = "chaos"
ladder = [64]
times = [0.5]
match_size = 64
"#;
    let cfg = write(&dir, "chaos.toml", text);
    let out_dir = dir.path().join("out");
    let out = cbo(&["chaos", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rung = &json(&out_dir.join("chaos.json"))["details"]["times"][0]["rungs"][0];
    assert_eq!(rung["gap_median"].as_f64(), Some(0.0));
    assert_eq!(rung["w_median"].as_f64(), Some(0.0));
}

#[test]
fn laplace_and_simulate_configs_run() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let dir = TempDir::new().unwrap();
    for (cmd, file) in [("laplace", "laplace.toml"), ("simulate", "simulate.toml")] {
        let out_dir = dir.path().join(cmd);
        let out = cbo(&[cmd, "--config", s(&configs.join(file)), "--out", s(&out_dir)]);
        assert_eq!(code(&out), 0, "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out_dir.join(format!("{cmd}.csv")).exists());
    }
}
