use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::EstimateWithCI;
use crate::gaussian::{tail_probability, CovarianceModel};
use crate::qp::QpSolution;
use crate::trend::TrendDistribution;

/// Probabilities below this cannot certify a finite constant.
pub const MIN_BOUND_PROBABILITY: f64 = 1e-12;

/// `C = 1 / P(W(T) > b)` for the two choices of `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConstant {
    /// `b = max(K₂T, 0)` componentwise; the value to use.
    pub constant: EstimateWithCI,
    /// `b = K₂T`; never larger than `constant`.
    pub unclipped: EstimateWithCI,
}

fn inverse_probability(
    model: &CovarianceModel,
    b: &[f64],
    budget: usize,
    seed: u64,
) -> Result<EstimateWithCI> {
    let p = tail_probability(model, b, budget, seed)?;
    if !(p.point >= MIN_BOUND_PROBABILITY) {
        return Err(Error::DegenerateBound(p.point));
    }
    let c = 1.0 / p.point;
    Ok(EstimateWithCI {
        point: c,
        stderr: p.stderr * c * c,
        n: p.n,
        seed,
        meta: format!("inverse {}", p.meta),
    })
}

/// Constant of the bound `ψ_T(u) ≤ C P(W(T) > u + ηT)`, from the upper end
/// `K₂` of the trend support.
pub fn upper_bound_constant(
    model: &CovarianceModel,
    trend: &TrendDistribution,
    horizon: f64,
    budget: usize,
    seed: u64,
) -> Result<BoundConstant> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::DomainError(format!("horizon T = {horizon} must be positive")));
    }
    trend.validate(model.dim())?;
    let (_, k2) = trend.bounds();
    // P(W(T) > b) = P(W(1) > b / √T).
    let s = horizon.sqrt();
    let unclipped_b: Vec<f64> = k2.iter().map(|k| k * s).collect();
    let clipped_b: Vec<f64> = unclipped_b.iter().map(|v| v.max(0.0)).collect();
    let constant = inverse_probability(model, &clipped_b, budget, seed)?;
    let unclipped = inverse_probability(model, &unclipped_b, budget, seed)?;
    Ok(BoundConstant { constant, unclipped })
}

/// `∏(1 - p_k)`: the factor a Bernoulli trend puts on `P(W(1) > au)`.
pub fn bernoulli_asymptotic_factor(p: &[f64]) -> Result<f64> {
    if let Some(q) = p.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::DomainError(format!("probability {q} outside [0, 1]")));
    }
    Ok(p.iter().map(|q| 1.0 - q).product())
}

/// `u^{-d} / ∏λ_i`: the factor a uniform trend on a box with lower corner 0
/// puts on `P(W(1) > au)`. Requires `I = {1, …, d}`.
pub fn uniform_trend_asymptotic(qp: &QpSolution, u: f64) -> Result<f64> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::DomainError(format!("level u = {u} must be positive")));
    }
    let d = qp.dim();
    if qp.active_set.len() < d {
        return Err(Error::PartialIndexSet { active: qp.active_set.len(), dim: d });
    }
    Ok(u.powi(-(d as i32)) / qp.lambda_product())
}
