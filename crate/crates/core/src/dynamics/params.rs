use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Result};
use crate::theory::RegularizerSchedule;

/// How the Wiener increments enter the particle update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// One scalar increment per particle multiplying the vector `X - m`.
    #[default]
    BaselineScalar,
    /// `|X - m|` times a scalar increment, applied along `(1, ..., 1)`.
    CommonDirection,
    /// Componentwise product of `X - m` with a d-dimensional increment.
    AnisotropicHadamard,
    /// `|X - m|` times a d-dimensional increment.
    Isotropic,
}

impl NoiseModel {
    pub const ALL: [NoiseModel; 4] = [
        NoiseModel::BaselineScalar,
        NoiseModel::CommonDirection,
        NoiseModel::AnisotropicHadamard,
        NoiseModel::Isotropic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseModel::BaselineScalar => "baseline_scalar",
            NoiseModel::CommonDirection => "common_direction",
            NoiseModel::AnisotropicHadamard => "anisotropic_hadamard",
            NoiseModel::Isotropic => "isotropic",
        }
    }
}

/// Scalar parameters of the particle system and its time discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub h: RegularizerSchedule,
    #[serde(default)]
    pub noise: NoiseModel,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    /// Moment order used for the recorded `V_p`.
    pub p: f64,
}

/// `min(0.01, 0.1 / lambda, 0.1 / sigma^2)`.
pub fn default_dt(lambda: f64, sigma: f64) -> f64 {
    let mut dt: f64 = 0.01;
    if lambda > 0.0 {
        dt = dt.min(0.1 / lambda);
    }
    if sigma > 0.0 {
        dt = dt.min(0.1 / (sigma * sigma));
    }
    dt
}

impl ModelParams {
    /// Parameters with the default step, recording every step, `p = 2`.
    pub fn new(lambda: f64, sigma: f64, alpha: f64, h: RegularizerSchedule, t_end: f64) -> Self {
        Self {
            lambda,
            sigma,
            alpha,
            h,
            noise: NoiseModel::BaselineScalar,
            dt: default_dt(lambda, sigma),
            t_end,
            record_every: 1,
            p: 2.0,
        }
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.lambda) {
            return Err(invalid_param(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(invalid_param(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        // alpha = 0 (uniform weights) is allowed for the simulator.
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(invalid_param(format!("alpha must be nonnegative, got {}", self.alpha)));
        }
        self.h.validate()?;
        if !positive(self.dt) || !positive(self.t_end) {
            return Err(invalid_param("dt and t_end must be positive"));
        }
        if self.dt > self.t_end {
            return Err(invalid_param(format!("dt = {} exceeds t_end = {}", self.dt, self.t_end)));
        }
        if self.dt * self.lambda >= 1.0 {
            return Err(invalid_param(format!(
                "explicit step unstable: dt * lambda = {} must be below 1",
                self.dt * self.lambda
            )));
        }
        if self.record_every == 0 {
            return Err(invalid_param("record_every must be at least 1"));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(invalid_param(format!("p must be at least 1, got {}", self.p)));
        }
        Ok(())
    }

    /// Number of steps to reach `t_end` (the last step may overshoot by
    /// less than one `dt`).
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    /// Whether step `k` is a recording time.
    pub fn records(&self, k: usize) -> bool {
        k.is_multiple_of(self.record_every) || k == self.n_steps()
    }
}
