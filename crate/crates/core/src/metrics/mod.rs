//! Statistics of empirical measures and trajectories.

mod assignment;
mod fit;
mod measure;
mod stats;
mod wasserstein;

pub use assignment::min_cost_assignment;
pub use fit::{decay_fit, decay_fit_default, DecayFit, DEFAULT_SKIP_FRACTION, MIN_FIT_SAMPLES};
pub use measure::{moments, EmpiricalMeasure, MomentSummary};
pub(crate) use measure::spread;
pub use stats::{concentration_frequency, frequency_above, laplace_from_values, laplace_value, weighted_sup};
pub use wasserstein::{wasserstein_p, WassersteinEstimate, WassersteinMethod, ASSIGNMENT_MAX, SLICED_PROJECTIONS};
