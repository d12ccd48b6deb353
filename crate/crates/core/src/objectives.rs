//! Benchmark objectives with gradients, Hessians and structural metadata.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, CboError, Result};

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
/// Writes the row-major `d x d` Hessian into the output buffer.
type HessFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// An objective `f: R^d -> R` together with what is known about it.
///
/// Immutable after construction and cheap to clone.
#[derive(Clone)]
pub struct ObjectiveSpec {
    name: String,
    dim: usize,
    eval: EvalFn,
    grad: Option<GradFn>,
    hessian: Option<HessFn>,
    /// `inf f`, strictly positive.
    pub f_min: f64,
    pub argmin: Option<Vec<f64>>,
    /// Lower estimate of `inf f` used by exp-floor regularizers.
    pub f_lower_bound: f64,
    pub hessian_c0: Option<f64>,
    pub hessian_c1: Option<f64>,
}

impl fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("f_min", &self.f_min)
            .field("argmin", &self.argmin)
            .field("f_lower_bound", &self.f_lower_bound)
            .field("hessian_c0", &self.hessian_c0)
            .field("hessian_c1", &self.hessian_c1)
            .field("has_gradient", &self.grad.is_some())
            .finish()
    }
}

impl ObjectiveSpec {
    /// A gradient-free objective. Only simulation is available for it;
    /// the assumption checks and Lipschitz estimates need a gradient.
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        f_min: f64,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(invalid_param("objective dimension must be at least 1"));
        }
        if !(f_min > 0.0) {
            return Err(invalid_param(format!("f_min must be positive, got {f_min}")));
        }
        Ok(Self {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            grad: None,
            hessian: None,
            f_min,
            argmin: None,
            f_lower_bound: f_min,
            hessian_c0: None,
            hessian_c1: None,
        })
    }

    pub fn with_gradient(mut self, grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn with_hessian(mut self, hess: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(hess));
        self
    }

    pub fn with_argmin(mut self, argmin: Vec<f64>) -> Self {
        self.argmin = Some(argmin);
        self
    }

    pub fn with_lower_bound(mut self, f_lo: f64) -> Self {
        self.f_lower_bound = f_lo;
        self
    }

    /// Overrides the declared Hessian domination constants.
    pub fn with_constants(mut self, c0: f64, c1: f64) -> Self {
        self.hessian_c0 = Some(c0);
        self.hessian_c1 = Some(c1);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_gradient(&self) -> bool {
        self.grad.is_some()
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// The Gibbs weight `exp(-alpha f(x))`.
    pub fn gibbs_weight(&self, x: &[f64], alpha: f64) -> f64 {
        (-alpha * self.eval(x)).exp()
    }

    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let g = self.grad.as_ref()?;
        let mut out = vec![0.0; self.dim];
        g(x, &mut out);
        Some(out)
    }

    /// Panics if the objective has no gradient; check [`Self::has_gradient`].
    pub(crate) fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        (self.grad.as_ref().expect("objective has a gradient"))(x, out)
    }

    /// Analytic Hessian if available, otherwise central differences of the
    /// gradient; `None` when neither exists.
    pub fn hessian(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        let d = self.dim;
        let mut buf = vec![0.0; d * d];
        if let Some(h) = &self.hessian {
            h(x, &mut buf);
            return Some(DMatrix::from_row_slice(d, d, &buf));
        }
        let grad = self.grad.as_ref()?;
        let step = 1e-5;
        let mut xp = x.to_vec();
        let mut gp = vec![0.0; d];
        let mut gm = vec![0.0; d];
        for j in 0..d {
            xp[j] = x[j] + step;
            grad(&xp, &mut gp);
            xp[j] = x[j] - step;
            grad(&xp, &mut gm);
            xp[j] = x[j];
            for i in 0..d {
                buf[i * d + j] = (gp[i] - gm[i]) / (2.0 * step);
            }
        }
        let m = DMatrix::from_row_slice(d, d, &buf);
        Some((&m + m.transpose()) * 0.5)
    }
}

/// `f(x) = (1/d) sum_i [(x_i - B)^2 - 10 cos(2 pi (x_i - B)) + 10] + C`.
pub fn rastrigin(dim: usize, shift: f64, offset: f64) -> Result<ObjectiveSpec> {
    if dim == 0 {
        return Err(invalid_param("rastrigin dimension must be at least 1"));
    }
    if !(offset > 0.0) {
        return Err(invalid_param(format!("rastrigin offset C must be positive, got {offset}")));
    }
    let inv_d = 1.0 / dim as f64;
    let spec = ObjectiveSpec::custom("rastrigin", dim, offset, move |x: &[f64]| {
        let s: f64 = x
            .iter()
            .map(|&xi| {
                let z = xi - shift;
                z * z - 10.0 * (2.0 * PI * z).cos() + 10.0
            })
            .sum();
        s * inv_d + offset
    })?
    .with_gradient(move |x, out| {
        for (o, &xi) in out.iter_mut().zip(x) {
            let z = xi - shift;
            *o = inv_d * (2.0 * z + 20.0 * PI * (2.0 * PI * z).sin());
        }
    })
    .with_hessian(move |x, out| {
        let d = x.len();
        out.fill(0.0);
        for (i, &xi) in x.iter().enumerate() {
            let z = xi - shift;
            out[i * d + i] = inv_d * (2.0 + 40.0 * PI * PI * (2.0 * PI * z).cos());
        }
    })
    .with_argmin(vec![shift; dim])
    .with_constants((2.0 + 40.0 * PI * PI) / dim as f64, 0.0);
    Ok(spec)
}

/// `f(x) = scale |x - center|^2 + offset`.
pub fn shifted_quadratic(center: Vec<f64>, scale: f64, offset: f64) -> Result<ObjectiveSpec> {
    if center.is_empty() {
        return Err(invalid_param("quadratic center must have at least one coordinate"));
    }
    if !(scale > 0.0) {
        return Err(invalid_param(format!("quadratic scale must be positive, got {scale}")));
    }
    if !(offset > 0.0) {
        return Err(invalid_param(format!("quadratic offset must be positive, got {offset}")));
    }
    let dim = center.len();
    let c_eval = center.clone();
    let c_grad = center.clone();
    let spec = ObjectiveSpec::custom("shifted_quadratic", dim, offset, move |x: &[f64]| {
        let sq: f64 = x.iter().zip(&c_eval).map(|(a, b)| (a - b) * (a - b)).sum();
        scale * sq + offset
    })?
    .with_gradient(move |x, out| {
        for ((o, a), b) in out.iter_mut().zip(x).zip(&c_grad) {
            *o = 2.0 * scale * (a - b);
        }
    })
    .with_hessian(move |x, out| {
        let d = x.len();
        out.fill(0.0);
        for i in 0..d {
            out[i * d + i] = 2.0 * scale;
        }
    })
    .with_argmin(center)
    .with_constants(2.0 * scale, 0.0);
    Ok(spec)
}

/// An axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return Err(invalid_input("box bounds must be nonempty and of equal length"));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l < u)) {
            return Err(invalid_input("box must be nondegenerate (lower < upper on every axis)"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// Tensor grid with `n` points per axis including both endpoints.
    pub fn grid(&self, n: usize) -> Result<impl Iterator<Item = Vec<f64>> + '_> {
        self.validate()?;
        if n < 2 {
            return Err(invalid_input("grid needs at least 2 points per axis"));
        }
        let d = self.dim();
        let total = n
            .checked_pow(d as u32)
            .ok_or_else(|| invalid_input("grid too large"))?;
        Ok((0..total).map(move |mut idx| {
            let mut x = vec![0.0; d];
            for (k, xk) in x.iter_mut().enumerate() {
                let j = idx % n;
                idx /= n;
                let frac = j as f64 / (n - 1) as f64;
                *xk = self.lower[k] + frac * (self.upper[k] - self.lower[k]);
            }
            x
        }))
    }
}

/// Outcome of [`check_assumptions`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// Grid estimate of the Lipschitz constant of `exp(-alpha f)`.
    pub lipschitz_estimate: f64,
    /// Whether `c0 I + c1 grad f grad f^T - Hess f` is PSD on every grid point.
    pub hessian_dominated: bool,
    /// Smallest eigenvalue of that matrix over the grid.
    pub min_eigenvalue: f64,
    pub worst_point: Vec<f64>,
}

/// Eigenvalue tolerance for the Hessian domination check.
pub const HESSIAN_EIG_TOL: f64 = -1e-8;

/// Grid check of the Lipschitz-weight and Hessian-domination hypotheses.
pub fn check_assumptions(spec: &ObjectiveSpec, alpha: f64, domain: &BoxDomain, n_grid: usize) -> Result<AssumptionReport> {
    let (c0, c1) = match (spec.hessian_c0, spec.hessian_c1) {
        (Some(c0), Some(c1)) => (c0, c1),
        _ => {
            return Err(CboError::UnsupportedObjective(format!(
                "{} declares no Hessian domination constants",
                spec.name()
            )))
        }
    };
    if !spec.has_gradient() {
        return Err(CboError::UnsupportedObjective(format!(
            "{} has neither an analytic nor a numerical Hessian",
            spec.name()
        )));
    }
    let lipschitz = crate::theory::lipschitz_estimate(spec, alpha, domain, n_grid)?;
    let d = spec.dim();
    let mut min_eig = f64::INFINITY;
    let mut worst = Vec::new();
    for x in domain.grid(n_grid)? {
        let g = DMatrix::from_column_slice(d, 1, &spec.gradient(&x).expect("gradient checked above"));
        let hess = spec.hessian(&x).expect("gradient checked above");
        let m = DMatrix::<f64>::identity(d, d) * c0 + (&g * g.transpose()) * c1 - hess;
        let eig = SymmetricEigen::new(m).eigenvalues.min();
        if eig < min_eig {
            min_eig = eig;
            worst = x;
        }
    }
    Ok(AssumptionReport {
        lipschitz_estimate: lipschitz,
        hessian_dominated: min_eig >= HESSIAN_EIG_TOL,
        min_eigenvalue: min_eig,
        worst_point: worst,
    })
}
