//! Orthant tail probabilities `P(W(1) > b)` by plain or exponentially tilted
//! Monte Carlo.

use rand_distr::{Distribution, StandardNormal};

use super::model::CovarianceModel;
use crate::error::{Error, Result};
use crate::estimate::{EstimateWithCI, Moments};
use crate::qp::solve_qp;
use crate::rng::{map_chunks, StreamKey, CHUNK_SIZE};

/// Standardized level above which tilting replaces plain sampling.
pub const TILT_SWITCH_LEVEL: f64 = 2.0;
pub const MIN_TAIL_BUDGET: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailStrategy {
    /// Plain sampling when every `b_i / √Σ_ii ≤ 2`, tilting otherwise.
    #[default]
    Auto,
    Plain,
    Tilted,
}

/// Sampling plan for a single barrier.
#[derive(Debug, Clone)]
enum Plan {
    Plain,
    /// Sample from `N(center, Σ)`; likelihood ratio `exp(-λᵀx + ½ λᵀcenter)`.
    Tilted {
        center: Vec<f64>,
        lambda: Vec<f64>,
        half_objective: f64,
    },
}

impl Plan {
    fn name(&self) -> &'static str {
        match self {
            Plan::Plain => "plain-mc",
            Plan::Tilted { .. } => "tilted",
        }
    }
}

fn plan_for(model: &CovarianceModel, b: &[f64], strategy: TailStrategy) -> Result<Plan> {
    let tilt = match strategy {
        TailStrategy::Plain => false,
        TailStrategy::Tilted => true,
        TailStrategy::Auto => {
            let sd = model.std_devs();
            b.iter().zip(&sd).any(|(bi, s)| bi / s > TILT_SWITCH_LEVEL)
        }
    };
    if !tilt {
        return Ok(Plan::Plain);
    }
    if b.iter().all(|&v| v <= 0.0) {
        return Err(Error::InvalidBarrier("tilting needs a barrier with a positive component".into()));
    }
    let qp = solve_qp(model, b)?;
    Ok(Plan::Tilted { half_objective: 0.5 * qp.objective, center: qp.a_tilde, lambda: qp.lambda })
}

fn check_barrier(model: &CovarianceModel, b: &[f64]) -> Result<()> {
    if b.len() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "barrier has length {}, model dimension {}",
            b.len(),
            model.dim()
        )));
    }
    if b.iter().any(|v| v.is_nan()) {
        return Err(Error::DomainError("barrier has NaN entries".into()));
    }
    Ok(())
}

/// Estimates `P(W(1) > b)` componentwise, choosing the strategy automatically.
pub fn tail_probability(
    model: &CovarianceModel,
    b: &[f64],
    budget: usize,
    seed: u64,
) -> Result<EstimateWithCI> {
    tail_probability_with(model, b, budget, seed, TailStrategy::Auto)
}

pub fn tail_probability_with(
    model: &CovarianceModel,
    b: &[f64],
    budget: usize,
    seed: u64,
    strategy: TailStrategy,
) -> Result<EstimateWithCI> {
    tail_mixture_with(model, &[(b.to_vec(), 1.0)], budget, seed, strategy)
}

/// Estimates `Σ_j w_j P(W(1) > b_j)` with common random numbers: one standard
/// normal draw per sample feeds every barrier, each with its own plan.
///
/// A single barrier with weight one reproduces [`tail_probability`] exactly.
pub fn tail_mixture(
    model: &CovarianceModel,
    barriers: &[(Vec<f64>, f64)],
    budget: usize,
    seed: u64,
) -> Result<EstimateWithCI> {
    tail_mixture_with(model, barriers, budget, seed, TailStrategy::Auto)
}

pub fn tail_mixture_with(
    model: &CovarianceModel,
    barriers: &[(Vec<f64>, f64)],
    budget: usize,
    seed: u64,
    strategy: TailStrategy,
) -> Result<EstimateWithCI> {
    if budget < MIN_TAIL_BUDGET {
        return Err(Error::BudgetTooSmall(format!("tail budget {budget} below {MIN_TAIL_BUDGET}")));
    }
    if barriers.is_empty() {
        return Err(Error::DomainError("no barriers given".into()));
    }
    let mut plans = Vec::with_capacity(barriers.len());
    for (b, w) in barriers {
        check_barrier(model, b)?;
        if !(w.is_finite() && *w >= 0.0) {
            return Err(Error::DomainError(format!("mixture weight {w} must be non-negative")));
        }
        plans.push(plan_for(model, b, strategy)?);
    }

    let d = model.dim();
    let chol = model.chol_rows();
    let key = StreamKey::new(seed, "gaussian.tail");
    let parts = map_chunks(budget, CHUNK_SIZE, |c, _start, len| {
        let mut rng = key.stream(c as u64);
        let mut z = vec![0.0; d];
        let mut y = vec![0.0; d];
        let mut acc = Moments::default();
        for _ in 0..len {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            for i in 0..d {
                let row = &chol[i * d..i * d + i + 1];
                y[i] = row.iter().zip(&z).map(|(l, zj)| l * zj).sum();
            }
            let mut value = 0.0;
            for ((b, w), plan) in barriers.iter().zip(&plans) {
                value += w * sample_value(plan, &y, b);
            }
            acc.push(value);
        }
        acc
    });
    let moments = Moments::merged(&parts);
    let meta = if plans.len() == 1 {
        plans[0].name().to_string()
    } else {
        let tilted = plans.iter().filter(|p| matches!(p, Plan::Tilted { .. })).count();
        format!("mixture({} barriers, {} tilted)", plans.len(), tilted)
    };
    Ok(EstimateWithCI::from_moments(&moments, seed, meta))
}

#[inline]
fn sample_value(plan: &Plan, y: &[f64], b: &[f64]) -> f64 {
    match plan {
        Plan::Plain => {
            if y.iter().zip(b).all(|(x, bi)| x > bi) {
                1.0
            } else {
                0.0
            }
        }
        Plan::Tilted { center, lambda, half_objective } => {
            let mut hit = true;
            let mut dot = 0.0;
            for i in 0..y.len() {
                let x = center[i] + y[i];
                if x <= b[i] {
                    hit = false;
                    break;
                }
                dot += lambda[i] * x;
            }
            if hit {
                // λᵀã = 2 · half_objective.
                (-dot + half_objective).exp()
            } else {
                0.0
            }
        }
    }
}
