//! The experiment configuration file (TOML).
//!
//! Tables: `objective`, `model`, `ensemble`, `monte_carlo`, `experiment`,
//! `output`. Every field is documented in the project README.

use std::path::{Path, PathBuf};

use cbo_core::dynamics::{default_dt, InitLaw, ModelParams, NoiseModel};
use cbo_core::objectives::{rastrigin, shifted_quadratic, ObjectiveSpec};
use cbo_core::theory::{RegularizerSchedule, ThresholdQuery, ThresholdReport};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    Decay,
    Chaos,
    Laplace,
    Meanfield,
    NoiseVariants,
    Concentration,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Simulate,
        ExperimentKind::Decay,
        ExperimentKind::Chaos,
        ExperimentKind::Laplace,
        ExperimentKind::Meanfield,
        ExperimentKind::NoiseVariants,
        ExperimentKind::Concentration,
    ];

    /// Subcommand name, also the stem of the output files.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Decay => "decay",
            ExperimentKind::Chaos => "chaos",
            ExperimentKind::Laplace => "laplace",
            ExperimentKind::Meanfield => "meanfield",
            ExperimentKind::NoiseVariants => "noise-variants",
            ExperimentKind::Concentration => "concentration",
        }
    }

    /// The threshold condition that gates this experiment.
    pub fn governing(self) -> Governing {
        match self {
            ExperimentKind::Meanfield => Governing::MeanField,
            ExperimentKind::Chaos | ExperimentKind::Concentration => Governing::Chaos,
            _ => Governing::Particle,
        }
    }
}

/// Which threshold a `lambda_rule` scales and which condition strict mode
/// enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Governing {
    /// Particle threshold for the configured noise model.
    Particle,
    MeanField,
    Chaos,
}

impl Governing {
    pub fn threshold(self, report: &ThresholdReport) -> Option<f64> {
        match self {
            Governing::Particle => Some(report.noise_threshold),
            Governing::MeanField => Some(report.meanfield_threshold),
            Governing::Chaos => report.chaos_threshold,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Governing::Particle => "particle (noise variant)",
            Governing::MeanField => "mean-field",
            Governing::Chaos => "propagation-of-chaos",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    Rastrigin {
        dim: usize,
        #[serde(default)]
        shift: f64,
        #[serde(default = "one")]
        offset: f64,
    },
    ShiftedQuadratic {
        center: Vec<f64>,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        offset: f64,
    },
}

impl ObjectiveConfig {
    pub fn build(&self) -> Result<ObjectiveSpec> {
        Ok(match self {
            ObjectiveConfig::Rastrigin { dim, shift, offset } => rastrigin(*dim, *shift, *offset)?,
            ObjectiveConfig::ShiftedQuadratic { center, scale, offset } => {
                shifted_quadratic(center.clone(), *scale, *offset)?
            }
        })
    }
}

/// `lambda = factor * threshold + offset`, the threshold being the one
/// governing the experiment (for noise variants, each variant's own).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaRule {
    pub factor: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub sigma: f64,
    pub alpha: f64,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_rule: Option<LambdaRule>,
    /// Defaults to `exp_floor` with `eta = 1` and `f_lo` the objective's
    /// known lower bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<RegularizerSchedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ref: Option<usize>,
    pub init: InitLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    #[serde(default = "one_usize")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { trials: 1, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplaceMode {
    Static,
    Dynamic,
}

/// Kind plus the knobs of every experiment; each kind reads only its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Standard errors allowed in one-sided statistical comparisons.
    #[serde(default = "two")]
    pub se_factor: f64,
    /// Relative slack on a fitted-rate bound.
    #[serde(default = "default_rate_slack")]
    pub rate_slack: f64,
    #[serde(default = "default_r2_min")]
    pub r2_min: f64,
    /// Start of the fit window; default skips the first 10% of the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
    /// chaos: finite system sizes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ladder: Option<Vec<usize>>,
    /// chaos: times at which medians are compared.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    /// chaos: size of the matched subsamples used for Wasserstein distances.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_size: Option<usize>,
    /// laplace, meanfield: ascending alpha values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<LaplaceMode>,
    /// laplace static: size of the fixed sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// meanfield, laplace dynamic: bound on the final gap to the minimum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_final_gap: Option<f64>,
    /// concentration: kappa as a fraction of kappa_max.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_fraction: Option<f64>,
    /// concentration: thresholds A as multiples of V_p of the initial law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_ladder: Option<Vec<f64>>,
    /// concentration: particle counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_ladder: Option<Vec<usize>>,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            se_factor: 2.0,
            rate_slack: default_rate_slack(),
            r2_min: default_r2_min(),
            t_start: None,
            ladder: None,
            times: None,
            match_size: None,
            alphas: None,
            mode: None,
            samples: None,
            max_final_gap: None,
            kappa_fraction: None,
            a_ladder: None,
            n_ladder: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub objective: ObjectiveConfig,
    pub model: ModelConfig,
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    pub experiment: ExperimentSpec,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn one_usize() -> usize {
    1
}
fn default_rate_slack() -> f64 {
    0.15
}
fn default_r2_min() -> f64 {
    0.95
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

/// Model parameters with `lambda` and `dt` resolved, and the threshold
/// report they were checked against.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: ModelParams,
    pub thresholds: ThresholdReport,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Parse {
            path: PathBuf::from("<config>"),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err(format!("cannot serialize config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::unreadable(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            HarnessError::Parse { message, .. } => HarnessError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn objective(&self) -> Result<ObjectiveSpec> {
        self.objective.build()
    }

    pub fn schedule(&self, f: &ObjectiveSpec) -> RegularizerSchedule {
        self.model.h.unwrap_or(RegularizerSchedule::ExpFloor {
            eta: 1.0,
            f_lo: f.f_lower_bound,
        })
    }

    /// Structural checks that need no simulation.
    pub fn validate(&self) -> Result<()> {
        let f = self.objective()?;
        let d = f.dim();
        if self.ensemble.init.dim() != d {
            return Err(config_err(format!(
                "init law has dimension {}, objective has dimension {d}",
                self.ensemble.init.dim()
            )));
        }
        self.ensemble.init.validate()?;
        self.schedule(&f).validate()?;
        let m = &self.model;
        match (m.lambda, m.lambda_rule) {
            (Some(_), Some(_)) => return Err(config_err("set either model.lambda or model.lambda_rule, not both")),
            (None, None) => return Err(config_err("one of model.lambda or model.lambda_rule is required")),
            _ => {}
        }
        if self.ensemble.n == 0 {
            return Err(config_err("ensemble.n must be at least 1"));
        }
        if self.monte_carlo.trials == 0 {
            return Err(config_err("monte_carlo.trials must be at least 1"));
        }
        let e = &self.experiment;
        if !(e.se_factor >= 0.0 && e.rate_slack >= 0.0) {
            return Err(config_err("experiment.se_factor and experiment.rate_slack must be nonnegative"));
        }
        if let Some(alphas) = &e.alphas {
            if alphas.is_empty() || alphas.windows(2).any(|w| w[1] <= w[0]) {
                return Err(config_err("experiment.alphas must be nonempty and strictly ascending"));
            }
        }
        if self.output.formats.is_empty() {
            return Err(config_err("output.formats must name at least one format"));
        }
        // Resolving the base parameters validates lambda, dt and friends.
        self.resolve(m.alpha, m.noise, e.kind.governing())?;
        Ok(())
    }

    /// Resolve `lambda` and `dt` for one `(alpha, noise)` pair.
    pub fn resolve(&self, alpha: f64, noise: NoiseModel, governing: Governing) -> Result<Resolved> {
        let f = self.objective()?;
        let m = &self.model;
        let h = self.schedule(&f);
        let query = |lambda: f64| ThresholdQuery {
            lambda,
            sigma: m.sigma,
            alpha,
            f_min: f.f_min,
            h,
            p: m.p,
            q: m.q,
            noise,
            dim: f.dim(),
        };
        let lambda = match (m.lambda, m.lambda_rule) {
            (Some(l), _) => l,
            (None, Some(rule)) => {
                let base = ThresholdReport::compute(&query(0.0))?;
                let thr = governing.threshold(&base).ok_or_else(|| {
                    config_err(format!("lambda_rule on the {} threshold needs model.q", governing.label()))
                })?;
                rule.factor * thr + rule.offset
            }
            (None, None) => return Err(config_err("one of model.lambda or model.lambda_rule is required")),
        };
        let thresholds = ThresholdReport::compute(&query(lambda))?;
        let params = ModelParams {
            lambda,
            sigma: m.sigma,
            alpha,
            h,
            noise,
            dt: m.dt.unwrap_or_else(|| default_dt(lambda, m.sigma)),
            t_end: m.t_end,
            record_every: m.record_every,
            p: m.p,
        };
        params.validate()?;
        Ok(Resolved { params, thresholds })
    }
}
