//! Dense Gaussian primitives: covariance models, densities, sampling and
//! orthant tail probabilities.

mod model;
mod tail;
mod univariate;

pub(crate) use model::submatrix;
pub use model::{
    build_model, cholesky, density, log_density, sample, CovarianceModel, GaussianVector, PIVOT_TOLERANCE,
};
pub use tail::{
    tail_mixture, tail_mixture_with, tail_probability, tail_probability_with, TailStrategy, MIN_TAIL_BUDGET,
    TILT_SWITCH_LEVEL,
};
pub use univariate::{log_phi, log_phibar, univariate_pdf, univariate_phi, univariate_phibar};
