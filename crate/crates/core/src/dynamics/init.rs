use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::rng::{StreamTag, TrialKey};
use crate::error::{invalid_param, Result};
use crate::points::Points;

/// Law of the initial particle positions.
///
/// Particle `i` draws from its own init stream, so the first `n` particles
/// of an ensemble of size `n' > n` coincide with an ensemble of size `n`
/// under the same [`TrialKey`]. The synchronous coupling relies on this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitLaw {
    Uniform { lower: Vec<f64>, upper: Vec<f64> },
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    PointMass { point: Vec<f64> },
    /// `base`, with particle `index` displaced by `shift`. Not i.i.d.; used
    /// as a negative control for symmetry checks.
    IndexShifted { base: Box<InitLaw>, index: usize, shift: Vec<f64> },
}

impl InitLaw {
    pub fn uniform_cube(dim: usize, lo: f64, hi: f64) -> Self {
        InitLaw::Uniform {
            lower: vec![lo; dim],
            upper: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            InitLaw::Uniform { lower, .. } => lower.len(),
            InitLaw::Gaussian { mean, .. } => mean.len(),
            InitLaw::PointMass { point } => point.len(),
            InitLaw::IndexShifted { base, .. } => base.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(invalid_param("initial law has dimension zero"));
        }
        match self {
            InitLaw::Uniform { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(invalid_param("uniform bounds differ in length"));
                }
                if lower.iter().zip(upper).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
                    return Err(invalid_param("uniform box must satisfy lower < upper, finite"));
                }
            }
            InitLaw::Gaussian { .. } => {
                self.cholesky()?;
            }
            InitLaw::PointMass { point } => {
                if point.iter().any(|v| !v.is_finite()) {
                    return Err(invalid_param("point mass must be finite"));
                }
            }
            InitLaw::IndexShifted { base, shift, .. } => {
                base.validate()?;
                if shift.len() != base.dim() {
                    return Err(invalid_param("shift dimension differs from the base law"));
                }
            }
        }
        Ok(())
    }

    pub fn is_iid(&self) -> bool {
        !matches!(self, InitLaw::IndexShifted { .. })
    }

    fn cholesky(&self) -> Result<DMatrix<f64>> {
        let InitLaw::Gaussian { mean, cov } = self else {
            unreachable!("cholesky of a non-Gaussian law")
        };
        let d = mean.len();
        if cov.len() != d || cov.iter().any(|row| row.len() != d) {
            return Err(invalid_param("covariance must be d x d"));
        }
        let m = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
        if (0..d).any(|i| (0..d).any(|j| m[(i, j)] != m[(j, i)])) {
            return Err(invalid_param("covariance must be symmetric"));
        }
        nalgebra::Cholesky::new(m)
            .map(|c| c.l())
            .ok_or_else(|| invalid_param("covariance must be positive definite"))
    }

    /// Draw `n` initial positions for the given trial.
    pub fn sample(&self, n: usize, key: TrialKey) -> Result<Points> {
        self.validate()?;
        let d = self.dim();
        let mut pts = Points::zeros(d, n);
        let chol = match self {
            InitLaw::Gaussian { .. } => Some(self.cholesky()?),
            _ => None,
        };
        for i in 0..n {
            let mut rng = key.stream(StreamTag::Init, i as u64);
            self.draw_into(i, &mut rng, chol.as_ref(), pts.get_mut(i));
        }
        Ok(pts)
    }

    fn draw_into(&self, i: usize, rng: &mut super::rng::ParticleStream, chol: Option<&DMatrix<f64>>, out: &mut [f64]) {
        match self {
            InitLaw::Uniform { lower, upper } => {
                for (k, x) in out.iter_mut().enumerate() {
                    *x = lower[k] + (upper[k] - lower[k]) * rng.uniform();
                }
            }
            InitLaw::Gaussian { mean, .. } => {
                let mut z = vec![0.0; out.len()];
                rng.fill_normals(&mut z);
                let y = chol.expect("cholesky factor") * DVector::from_vec(z);
                for (k, x) in out.iter_mut().enumerate() {
                    *x = mean[k] + y[k];
                }
            }
            InitLaw::PointMass { point } => out.copy_from_slice(point),
            InitLaw::IndexShifted { base, index, shift } => {
                base.draw_into(i, rng, chol, out);
                if i == *index {
                    for (x, s) in out.iter_mut().zip(shift) {
                        *x += s;
                    }
                }
            }
        }
    }

    /// Whether `x` lies in the closed support of the law.
    pub fn support_contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            InitLaw::Uniform { lower, upper } => x.iter().zip(lower.iter().zip(upper)).all(|(v, (a, b))| a <= v && v <= b),
            InitLaw::Gaussian { .. } => true,
            InitLaw::PointMass { point } => point.as_slice() == x,
            InitLaw::IndexShifted { base, .. } => base.support_contains(x),
        }
    }

    /// Population second centered moment `E|X - EX|^2`, when known in closed form.
    pub fn variance(&self) -> Option<f64> {
        match self {
            InitLaw::Uniform { lower, upper } => Some(lower.iter().zip(upper).map(|(a, b)| (b - a) * (b - a) / 12.0).sum()),
            InitLaw::Gaussian { cov, .. } => Some((0..cov.len()).map(|i| cov[i][i]).sum()),
            InitLaw::PointMass { .. } => Some(0.0),
            InitLaw::IndexShifted { .. } => None,
        }
    }
}
