//! Named constants and thresholds of the regularized CBO model.
//!
//! Everything here is a pure function of scalar parameters. `Lambda` below
//! always denotes the weight-ratio constant
//! `(exp(-alpha f_min) + h(alpha)) / h(alpha)` returned by [`lambda_alpha`].

use serde::{Deserialize, Serialize};

use crate::dynamics::NoiseModel;
use crate::error::{invalid_input, invalid_param, CboError, Result};
use crate::objectives::{BoxDomain, ObjectiveSpec};

/// The strictly positive regularizer `h(alpha)` added to the Gibbs weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegularizerSchedule {
    /// `h(alpha) = eta`.
    Constant { eta: f64 },
    /// `h(alpha) = eta * exp(-alpha * f_lo)`; keeps `Lambda` bounded in alpha
    /// whenever `f_lo <= inf f`.
    ExpFloor { eta: f64, f_lo: f64 },
}

impl RegularizerSchedule {
    pub fn validate(&self) -> Result<()> {
        let eta = match *self {
            Self::Constant { eta } => eta,
            Self::ExpFloor { eta, f_lo } => {
                if !f_lo.is_finite() {
                    return Err(invalid_param("h-schedule f_lo must be finite"));
                }
                eta
            }
        };
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid_param(format!("h-schedule eta must be positive, got {eta}")));
        }
        Ok(())
    }

    /// `ln h(alpha)`, exact even when `h(alpha)` itself underflows.
    pub fn ln_value(&self, alpha: f64) -> f64 {
        match *self {
            Self::Constant { eta } => eta.ln(),
            Self::ExpFloor { eta, f_lo } => eta.ln() - alpha * f_lo,
        }
    }

    pub fn value(&self, alpha: f64) -> f64 {
        self.ln_value(alpha).exp()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid_param(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(invalid_param(format!("p must be at least 2, got {p}")));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid_param(format!("sigma must be nonnegative, got {sigma}")));
    }
    Ok(())
}

/// `Lambda_alpha = (exp(-alpha f_min) + h(alpha)) / h(alpha)`.
pub fn lambda_alpha(f_min: f64, h: &RegularizerSchedule, alpha: f64) -> Result<f64> {
    if !(f_min > 0.0 && f_min.is_finite()) {
        return Err(invalid_param(format!("f_min must be positive, got {f_min}")));
    }
    check_alpha(alpha)?;
    h.validate()?;
    Ok(lambda_alpha_formula(f_min, h, alpha))
}

/// The formula without the `alpha > 0` restriction; `alpha = 0` means uniform
/// weights, for which `Lambda = (1 + h(0)) / h(0)`.
pub(crate) fn lambda_alpha_formula(f_min: f64, h: &RegularizerSchedule, alpha: f64) -> f64 {
    1.0 + (-alpha * f_min - h.ln_value(alpha)).exp()
}

/// Consensus threshold `(p-1) Lambda^{2/p} sigma^2` for the particle system.
pub fn particle_threshold(p: f64, sigma: f64, big_lambda: f64) -> Result<f64> {
    check_p(p)?;
    check_sigma(sigma)?;
    Ok((p - 1.0) * big_lambda.powf(2.0 / p) * sigma * sigma)
}

/// Mean-field consensus threshold `(p-1)(1 + Lambda^{2/p}) sigma^2`.
///
/// Evaluated as `particle_threshold + (p-1) sigma^2` so the difference of the
/// two thresholds is exact.
pub fn meanfield_threshold(p: f64, sigma: f64, big_lambda: f64) -> Result<f64> {
    Ok(particle_threshold(p, sigma, big_lambda)? + (p - 1.0) * sigma * sigma)
}

/// Decay threshold of the particle system under each noise structure.
///
/// `dim` only matters for the common-direction and isotropic variants.
pub fn noise_threshold(noise: NoiseModel, p: f64, dim: usize, sigma: f64, big_lambda: f64) -> Result<f64> {
    let base = particle_threshold(p, sigma, big_lambda)?;
    let d = dim as f64;
    Ok(match noise {
        NoiseModel::BaselineScalar | NoiseModel::AnisotropicHadamard => base,
        NoiseModel::CommonDirection => d * base,
        NoiseModel::Isotropic => base + (d - 1.0) * big_lambda.powf(2.0 / p) * sigma * sigma,
    })
}

/// The four constants entering the two concentration estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationConstants {
    /// `c_con,p = 2 Lambda^{1-2/p} lambda_{p} + 2(p-1) sigma^2` (particle system).
    pub c_con: f64,
    /// `bar c_con,p = 2 bar-lambda_{p} + 4(p-1) sigma^2` (coupled mean-field copies).
    pub c_con_bar: f64,
    /// `lambda_{pq}`.
    pub particle_pq: f64,
    /// `bar-lambda_{pq}`.
    pub meanfield_pq: f64,
}

pub fn concentration_constants(p: f64, q: f64, sigma: f64, big_lambda: f64) -> Result<ConcentrationConstants> {
    check_p(p)?;
    if !(q > 2.0 && q.is_finite()) {
        return Err(invalid_param(format!("q must exceed 2, got {q}")));
    }
    let s2 = sigma * sigma;
    let particle_p = particle_threshold(p, sigma, big_lambda)?;
    let meanfield_p = meanfield_threshold(p, sigma, big_lambda)?;
    Ok(ConcentrationConstants {
        c_con: 2.0 * big_lambda.powf(1.0 - 2.0 / p) * particle_p + 2.0 * (p - 1.0) * s2,
        c_con_bar: 2.0 * meanfield_p + 4.0 * (p - 1.0) * s2,
        particle_pq: particle_threshold(p * q, sigma, big_lambda)?,
        meanfield_pq: meanfield_threshold(p * q, sigma, big_lambda)?,
    })
}

/// Lower bound on `lambda` for uniform-in-time propagation of chaos, in its
/// expanded closed form.
pub fn chaos_threshold_expanded(p: f64, q: f64, sigma: f64, big_lambda: f64) -> Result<f64> {
    check_p(p)?;
    check_sigma(sigma)?;
    if !(q > 2.0 && q.is_finite()) {
        return Err(invalid_param(format!("q must exceed 2, got {q}")));
    }
    let s2 = sigma * sigma;
    let pq = p * q;
    let l_pq = big_lambda.powf(2.0 / pq);
    let l_p = big_lambda.powf(2.0 / p);
    let first = (pq - 1.0) * (1.0 + l_pq) * s2 + 2.0 * (p - 1.0) * (3.0 + l_p) * s2;
    let second = (pq - 1.0) * l_pq * s2 + 2.0 * (p - 1.0) * (1.0 + big_lambda) * s2;
    Ok(first.max(second))
}

/// The same threshold assembled from the concentration constants:
/// `max(bar-lambda_{pq} + bar c_con, lambda_{pq} + c_con)`.
pub fn chaos_threshold_from_constants(p: f64, q: f64, sigma: f64, big_lambda: f64) -> Result<f64> {
    let c = concentration_constants(p, q, sigma, big_lambda)?;
    Ok((c.meanfield_pq + c.c_con_bar).max(c.particle_pq + c.c_con))
}

/// Propagation-of-chaos threshold; both algebraic routes are evaluated and
/// must agree to relative `1e-12`.
pub fn chaos_threshold(p: f64, q: f64, sigma: f64, big_lambda: f64) -> Result<f64> {
    let expanded = chaos_threshold_expanded(p, q, sigma, big_lambda)?;
    let assembled = chaos_threshold_from_constants(p, q, sigma, big_lambda)?;
    if (expanded - assembled).abs() > 1e-12 * expanded.abs().max(assembled.abs()) {
        return Err(invalid_input(format!(
            "chaos threshold expansions disagree: {expanded} vs {assembled}"
        )));
    }
    Ok(expanded)
}

/// Supremum of admissible exponential weights `kappa` for which both
/// concentration estimates hold simultaneously.
pub fn kappa_max(p: f64, q: f64, sigma: f64, big_lambda: f64, lambda: f64) -> Result<f64> {
    let threshold = chaos_threshold(p, q, sigma, big_lambda)?;
    if !(lambda > threshold) {
        return Err(CboError::ThresholdNotMet {
            condition: "propagation of chaos".into(),
            threshold,
            lambda,
            deficit: threshold - lambda,
        });
    }
    let c = concentration_constants(p, q, sigma, big_lambda)?;
    let coupled = lambda - c.c_con_bar.max(c.meanfield_pq);
    let particle = lambda - c.c_con.max(c.particle_pq);
    Ok(p * coupled.min(particle))
}

/// Inputs of the well-prepared initial-data condition for consensus at the
/// minimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellPreparedQuery {
    /// `E omega(X_in)`.
    pub e_omega_in: f64,
    /// `Var(X_in)` (trace of the covariance).
    pub var_in: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub big_lambda: f64,
    pub f_min: f64,
    /// Lipschitz constant of `omega = exp(-alpha f)`.
    pub l_omega: f64,
    /// Hessian domination constant `c0`.
    pub c0: f64,
}

impl WellPreparedQuery {
    fn gap(&self) -> Result<f64> {
        let threshold = particle_threshold(2.0, self.sigma, self.big_lambda)?;
        if !(self.lambda > threshold) {
            return Err(CboError::ThresholdNotMet {
                condition: "consensus (p = 2)".into(),
                threshold,
                lambda: self.lambda,
                deficit: threshold - self.lambda,
            });
        }
        Ok(self.lambda - threshold)
    }

    /// Right-hand side of the well-prepared inequality.
    pub fn rhs(&self) -> Result<f64> {
        let gap = self.gap()?;
        if self.var_in < 0.0 {
            return Err(invalid_param("variance must be nonnegative"));
        }
        let drift = self.lambda * self.l_omega / gap * (2.0 * self.big_lambda * self.var_in).sqrt();
        let diffusion = self.alpha
            * self.sigma
            * self.sigma
            * self.c0
            * self.big_lambda
            * (-self.alpha * self.f_min).exp()
            / (2.0 * gap)
            * self.var_in;
        Ok(drift + diffusion)
    }

    /// Explicit lower bound on the trial-averaged weighted energy
    /// `(1/N) sum_i E omega(X_t^i)` at time `t`.
    pub fn energy_lower_bound(&self, t: f64) -> Result<f64> {
        let gap = self.gap()?;
        let drift = self.lambda * self.l_omega * (2.0 * self.big_lambda * self.var_in).sqrt()
            * (1.0 - (-gap * t).exp())
            / gap;
        let diffusion = self.alpha
            * self.sigma
            * self.sigma
            * self.c0
            * (-self.alpha * self.f_min).exp()
            * self.big_lambda
            * (1.0 - (-2.0 * gap * t).exp())
            / (2.0 * gap)
            * self.var_in;
        Ok(self.e_omega_in - drift - diffusion)
    }
}

/// Largest `eps` in `(0, 1]` with `(1 - eps) E omega(X_in) >= rhs`, or `None`
/// when no such `eps` exists.
pub fn wellprepared_margin(query: &WellPreparedQuery) -> Result<Option<f64>> {
    let rhs = query.rhs()?;
    if !(query.e_omega_in > 0.0) {
        return Err(invalid_param("E omega(X_in) must be positive"));
    }
    let eps = 1.0 - rhs / query.e_omega_in;
    Ok((eps > 0.0).then_some(eps.min(1.0)))
}

/// Grid estimate of `alpha * sup |grad f(x)| exp(-alpha f(x))` over `domain`.
///
/// Uses a tensor grid with `n_grid` points per axis, endpoints included, so
/// refining `n -> 2n - 1` nests the grids and the estimate never decreases.
pub fn lipschitz_estimate(f: &ObjectiveSpec, alpha: f64, domain: &BoxDomain, n_grid: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if !f.has_gradient() {
        return Err(CboError::UnsupportedObjective(format!(
            "{} has no gradient",
            f.name()
        )));
    }
    if domain.dim() != f.dim() {
        return Err(invalid_input("domain dimension does not match objective"));
    }
    let mut grad = vec![0.0; f.dim()];
    let mut best = 0.0f64;
    for x in domain.grid(n_grid)? {
        f.gradient_into(&x, &mut grad);
        let g = crate::points::norm(&grad);
        let v = g * (-alpha * f.eval(&x)).exp();
        if v > best {
            best = v;
        }
    }
    Ok(alpha * best)
}

/// Which threshold conditions the supplied `lambda` satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSatisfaction {
    pub particle: bool,
    pub noise_variant: bool,
    pub meanfield: bool,
    pub chaos: Option<bool>,
}

/// Every threshold for one parameter configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub lambda: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub p: f64,
    pub q: Option<f64>,
    pub lambda_alpha: f64,
    pub particle_threshold: f64,
    /// Particle threshold adjusted to the configured noise structure.
    pub noise_threshold: f64,
    pub meanfield_threshold: f64,
    pub chaos_threshold: Option<f64>,
    pub kappa_max: Option<f64>,
    pub satisfied: ThresholdSatisfaction,
}

/// Parameters needed to evaluate a [`ThresholdReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdQuery {
    pub lambda: f64,
    pub sigma: f64,
    /// `alpha = 0` is accepted and evaluates `Lambda` with uniform weights.
    pub alpha: f64,
    pub f_min: f64,
    pub h: RegularizerSchedule,
    pub p: f64,
    pub q: Option<f64>,
    pub noise: NoiseModel,
    pub dim: usize,
}

impl ThresholdReport {
    pub fn compute(query: &ThresholdQuery) -> Result<Self> {
        let big_lambda = if query.alpha == 0.0 {
            query.h.validate()?;
            lambda_alpha_formula(query.f_min, &query.h, 0.0)
        } else {
            lambda_alpha(query.f_min, &query.h, query.alpha)?
        };
        let particle = particle_threshold(query.p, query.sigma, big_lambda)?;
        let noise = noise_threshold(query.noise, query.p, query.dim, query.sigma, big_lambda)?;
        let meanfield = meanfield_threshold(query.p, query.sigma, big_lambda)?;
        let chaos = query
            .q
            .map(|q| chaos_threshold(query.p, q, query.sigma, big_lambda))
            .transpose()?;
        let kappa = match query.q {
            Some(q) if chaos.is_some_and(|c| query.lambda > c) => {
                Some(kappa_max(query.p, q, query.sigma, big_lambda, query.lambda)?)
            }
            _ => None,
        };
        Ok(Self {
            lambda: query.lambda,
            sigma: query.sigma,
            alpha: query.alpha,
            p: query.p,
            q: query.q,
            lambda_alpha: big_lambda,
            particle_threshold: particle,
            noise_threshold: noise,
            meanfield_threshold: meanfield,
            chaos_threshold: chaos,
            kappa_max: kappa,
            satisfied: ThresholdSatisfaction {
                particle: query.lambda > particle,
                noise_variant: query.lambda > noise,
                meanfield: query.lambda > meanfield,
                chaos: chaos.map(|c| query.lambda > c),
            },
        })
    }

    /// Human-readable list of every unmet condition.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |ok: bool, name: &str, thr: f64| {
            if !ok {
                out.push(format!("lambda = {} <= {name} threshold {thr}", self.lambda));
            }
        };
        push(self.satisfied.particle, "particle", self.particle_threshold);
        push(self.satisfied.noise_variant, "noise-variant", self.noise_threshold);
        push(self.satisfied.meanfield, "mean-field", self.meanfield_threshold);
        if let (Some(ok), Some(thr)) = (self.satisfied.chaos, self.chaos_threshold) {
            push(ok, "propagation-of-chaos", thr);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const EXP_FLOOR: RegularizerSchedule = RegularizerSchedule::ExpFloor { eta: 1.0, f_lo: 1.0 };
    const UNIT: RegularizerSchedule = RegularizerSchedule::Constant { eta: 1.0 };

    #[test]
    fn lambda_alpha_examples() {
        assert_relative_eq!(lambda_alpha(1.0, &EXP_FLOOR, 1.0).unwrap(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(lambda_alpha(2f64.ln(), &UNIT, 1.0).unwrap(), 1.5, max_relative = 1e-15);
        let big = lambda_alpha(1.0, &UNIT, 800.0).unwrap();
        assert_eq!(big, 1.0);
    }

    #[test]
    fn lambda_alpha_rejects_bad_input() {
        assert!(matches!(lambda_alpha(0.0, &UNIT, 1.0), Err(CboError::InvalidParameter(_))));
        assert!(matches!(lambda_alpha(1.0, &UNIT, 0.0), Err(CboError::InvalidParameter(_))));
        assert!(lambda_alpha(1.0, &RegularizerSchedule::Constant { eta: 0.0 }, 1.0).is_err());
    }

    #[test]
    fn exp_floor_keeps_lambda_bounded() {
        // f_lo below inf f: Lambda = 1 + exp(-alpha (f_min - f_lo)) / eta <= 2.
        let h = RegularizerSchedule::ExpFloor { eta: 1.0, f_lo: 0.5 };
        for alpha in [0.1, 1.0, 10.0, 100.0, 1000.0] {
            let l = lambda_alpha(1.0, &h, alpha).unwrap();
            assert!((1.0..=2.0).contains(&l));
        }
    }

    #[test]
    fn particle_threshold_examples() {
        assert_relative_eq!(particle_threshold(2.0, 0.5, 2.0).unwrap(), 0.5, max_relative = 1e-15);
        assert_eq!(particle_threshold(3.0, 0.0, 5.0).unwrap(), 0.0);
        assert_relative_eq!(particle_threshold(4.0, 1.0, 1.0).unwrap(), 3.0);
        assert!(particle_threshold(1.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn meanfield_threshold_examples() {
        assert_relative_eq!(meanfield_threshold(2.0, 1.0, 1.0).unwrap(), 2.0);
        assert_eq!(meanfield_threshold(2.0, 0.0, 3.0).unwrap(), 0.0);
        assert_relative_eq!(meanfield_threshold(2.0, 1.0, 4.0).unwrap(), 5.0);
        assert_eq!(
            meanfield_threshold(2.0, 1.0, 4.0).unwrap() - particle_threshold(2.0, 1.0, 4.0).unwrap(),
            1.0
        );
        assert!(meanfield_threshold(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn chaos_threshold_examples() {
        assert_relative_eq!(chaos_threshold(2.0, 3.0, 1.0, 1.0).unwrap(), 18.0, max_relative = 1e-14);
        assert_eq!(chaos_threshold(2.0, 3.0, 0.0, 7.0).unwrap(), 0.0);
        // Lambda = 2, p = 2, q = 4, sigma = 0.5, first branch by hand:
        // 7 (1 + 2^{1/4}) / 4 + 2 * 5 / 4.
        let expected = 7.0 * (1.0 + 2f64.powf(0.25)) * 0.25 + 2.5;
        assert_relative_eq!(chaos_threshold(2.0, 4.0, 0.5, 2.0).unwrap(), expected, max_relative = 1e-14);
        assert!(chaos_threshold(2.0, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn kappa_max_examples() {
        assert_relative_eq!(kappa_max(2.0, 3.0, 1.0, 1.0, 20.0).unwrap(), 20.0, max_relative = 1e-14);
        // All thresholds vanish without noise.
        assert_relative_eq!(kappa_max(3.0, 4.0, 0.0, 5.0, 2.5).unwrap(), 7.5);
        match kappa_max(2.0, 3.0, 1.0, 1.0, 17.0) {
            Err(CboError::ThresholdNotMet { deficit, .. }) => assert_relative_eq!(deficit, 1.0, max_relative = 1e-12),
            other => panic!("expected threshold error, got {other:?}"),
        }
    }

    fn query(e_omega_in: f64, var_in: f64) -> WellPreparedQuery {
        WellPreparedQuery {
            e_omega_in,
            var_in,
            lambda: 1.0,
            sigma: 0.2,
            alpha: 5.0,
            big_lambda: 2.0,
            f_min: 1.0,
            l_omega: 0.1,
            c0: 3.0,
        }
    }

    #[test]
    fn wellprepared_zero_variance_gives_full_margin() {
        assert_eq!(wellprepared_margin(&query(0.3, 0.0)).unwrap(), Some(1.0));
    }

    #[test]
    fn wellprepared_boundary_is_absent() {
        let rhs = query(1.0, 0.25).rhs().unwrap();
        assert_eq!(wellprepared_margin(&query(rhs, 0.25)).unwrap(), None);
        assert!(wellprepared_margin(&query(2.0 * rhs, 0.25)).unwrap().unwrap() > 0.49);
    }

    #[test]
    fn wellprepared_requires_consensus_threshold() {
        let mut q = query(1.0, 0.1);
        q.lambda = 0.05;
        assert!(matches!(wellprepared_margin(&q), Err(CboError::ThresholdNotMet { .. })));
    }

    #[test]
    fn energy_bound_starts_at_initial_energy() {
        let q = query(0.3, 0.2);
        assert_eq!(q.energy_lower_bound(0.0).unwrap(), 0.3);
        let limit = q.energy_lower_bound(1e6).unwrap();
        assert_relative_eq!(limit, 0.3 - q.rhs().unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn noise_thresholds() {
        let base = particle_threshold(2.0, 0.3, 2.0).unwrap();
        assert_eq!(noise_threshold(NoiseModel::AnisotropicHadamard, 2.0, 3, 0.3, 2.0).unwrap(), base);
        assert_relative_eq!(noise_threshold(NoiseModel::CommonDirection, 2.0, 3, 0.3, 2.0).unwrap(), 3.0 * base);
        assert_relative_eq!(
            noise_threshold(NoiseModel::Isotropic, 2.0, 3, 0.3, 2.0).unwrap(),
            base + 2.0 * 2.0 * 0.09,
            max_relative = 1e-14
        );
        for noise in NoiseModel::ALL {
            assert_eq!(noise_threshold(noise, 2.0, 1, 0.3, 2.0).unwrap(), base);
        }
    }

    #[test]
    fn report_lists_violations() {
        let report = ThresholdReport::compute(&ThresholdQuery {
            lambda: 0.1,
            sigma: 0.5,
            alpha: 1.0,
            f_min: 1.0,
            h: EXP_FLOOR,
            p: 2.0,
            q: Some(3.0),
            noise: NoiseModel::BaselineScalar,
            dim: 2,
        })
        .unwrap();
        assert!(!report.satisfied.particle);
        assert_eq!(report.kappa_max, None);
        assert_eq!(report.violations().len(), 4);
        assert!(report.lambda_alpha >= 1.0);
    }
}
