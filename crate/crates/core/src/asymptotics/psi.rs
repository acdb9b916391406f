//! Assembly of `ψ₁(au) ≈ (∏_{i∈I} λ_i) · I_a · E_η P(W(1) > au + η)`.

use serde::{Deserialize, Serialize};

use super::frontier::MAX_FRONTIER_DIM;
use super::ia::{estimate_ia, estimate_ia_extended, estimate_ia_quadrature, IaConfig, QuadratureConfig};
use crate::error::{Error, Result};
use crate::estimate::EstimateWithCI;
use crate::gaussian::{tail_mixture, CovarianceModel};
use crate::qp::{solve_qp, QpSolution};
use crate::rng::StreamKey;
use crate::simulator::RuinScenario;
use crate::trend::TrendDistribution;

pub const DEFAULT_TREND_DRAWS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConfig {
    pub ia: IaConfig,
    /// If set, `Λ` is doubled from `ia.horizon` up to this cap until the
    /// estimate settles.
    pub extend_to: Option<f64>,
    pub tail_budget: usize,
    /// Draws of `η` for laws without a small finite support.
    pub trend_draws: usize,
}

impl Default for AsymptoticConfig {
    fn default() -> Self {
        Self {
            ia: IaConfig::default(),
            extend_to: None,
            tail_budget: 1_000_000,
            trend_draws: DEFAULT_TREND_DRAWS,
        }
    }
}

/// The scenario mapped to `T = 1` by Brownian scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitHorizon {
    /// `a / √T`.
    pub barrier: Vec<f64>,
    /// Law of `√T · η`.
    pub trend: TrendDistribution,
    /// `√T`.
    pub scale: f64,
}

/// `ψ_T(au) = ψ₁(a u / √T)` with trend `√T η`, since `W(tT) = √T W(t)` in law.
pub fn to_unit_horizon(scenario: &RuinScenario) -> UnitHorizon {
    let s = scenario.horizon.sqrt();
    UnitHorizon {
        barrier: scenario.barrier.iter().map(|a| a / s).collect(),
        trend: scenario.trend.scaled(s),
        scale: s,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticResult {
    /// Solution for the rescaled barrier `a / √T`.
    pub qp: QpSolution,
    pub ia_estimate: EstimateWithCI,
    pub lambda_product: f64,
    pub tail_term: EstimateWithCI,
    pub psi_approx: EstimateWithCI,
    /// `Λ` behind `ia_estimate`.
    pub lambda_horizon: f64,
    pub u: f64,
    /// Original horizon `T`; barrier and trend were rescaled by `√T`.
    pub horizon: f64,
}

/// Estimates `I_a(Λ)` for the unit-horizon problem, routing `|I| > 3` to
/// quadrature. Returns the estimate and the horizon it belongs to.
pub fn ia_for(
    qp: &QpSolution,
    model: &CovarianceModel,
    config: &AsymptoticConfig,
    seed: u64,
) -> Result<(EstimateWithCI, f64)> {
    if let Some(cap) = config.extend_to {
        let ext = estimate_ia_extended(qp, model, &config.ia, cap, seed)?;
        return Ok((ext.estimate, ext.horizon));
    }
    let est = if qp.active_set.len() <= MAX_FRONTIER_DIM {
        estimate_ia(qp, model, &config.ia, seed)?
    } else {
        let q = QuadratureConfig {
            horizon: config.ia.horizon,
            steps_per_unit: config.ia.steps_per_unit,
            inner_paths: config.ia.n_paths,
            ..QuadratureConfig::default()
        };
        estimate_ia_quadrature(qp, model, &q, seed)?.estimate
    };
    Ok((est, config.ia.horizon))
}

/// `E_η P(W(1) > b + η)`.
///
/// Finitely supported laws are summed atom by atom. Other laws use
/// `n_draws` values of `η` on a jittered grid: the box is cut into `k^d`
/// cells, `k = ⌊n_draws^{1/d}⌋`, with one uniform point per cell. All
/// barriers share the Gaussian samples, so a point mass reproduces
/// [`crate::gaussian::tail_probability`] bit for bit.
pub fn tail_term(
    model: &CovarianceModel,
    b: &[f64],
    trend: &TrendDistribution,
    budget: usize,
    n_draws: usize,
    seed: u64,
) -> Result<EstimateWithCI> {
    let d = model.dim();
    trend.validate(d)?;
    if b.len() != d {
        return Err(Error::DimensionMismatch(format!("barrier has length {}, model dimension {d}", b.len())));
    }
    let shift = |eta: &[f64]| b.iter().zip(eta).map(|(x, e)| x + e).collect::<Vec<_>>();
    let barriers: Vec<(Vec<f64>, f64)> = match trend.finite_atoms() {
        Some(atoms) => atoms.iter().map(|a| (shift(&a.value), a.prob)).collect(),
        None => {
            let draws = trend_grid(trend, n_draws, seed)?;
            let w = 1.0 / draws.len() as f64;
            draws.iter().map(|eta| (shift(eta), w)).collect()
        }
    };
    tail_mixture(model, &barriers, budget, seed)
}

/// Jittered-grid draws of `η`: uniform on boxes, i.i.d. for other laws.
fn trend_grid(trend: &TrendDistribution, n_draws: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    use rand::Rng;
    if n_draws == 0 {
        return Err(Error::BudgetTooSmall("need at least one trend draw".into()));
    }
    let d = trend.dim();
    let mut rng = StreamKey::new(seed, "asym.trend").stream(0);
    match trend {
        TrendDistribution::UniformBox { lo, hi } => {
            let k = ((n_draws as f64).powf(1.0 / d as f64) + 1e-9).floor().max(1.0) as usize;
            let cells = k.pow(d as u32);
            let mut out = Vec::with_capacity(cells);
            for cell in 0..cells {
                let mut idx = cell;
                let mut eta = vec![0.0; d];
                for i in (0..d).rev() {
                    let j = idx % k;
                    idx /= k;
                    let frac = (j as f64 + rng.random::<f64>()) / k as f64;
                    eta[i] = lo[i] + (hi[i] - lo[i]) * frac;
                }
                out.push(eta);
            }
            Ok(out)
        }
        _ => Ok((0..n_draws)
            .map(|_| {
                let mut eta = vec![0.0; d];
                trend.draw(&mut rng, &mut eta);
                eta
            })
            .collect()),
    }
}

/// Combines the pieces; the standard error follows from the relative errors
/// of the two estimated factors.
pub fn assemble(
    qp: QpSolution,
    ia_estimate: EstimateWithCI,
    tail: EstimateWithCI,
    lambda_horizon: f64,
    u: f64,
    horizon: f64,
) -> Result<AsymptoticResult> {
    let lambda_product = qp.lambda_product();
    if !(lambda_product > 0.0) {
        return Err(Error::NonPositiveLambda(lambda_product));
    }
    if !(ia_estimate.point > 0.0) {
        return Err(Error::DomainError(format!("I_a estimate {} is not positive", ia_estimate.point)));
    }
    let point = lambda_product * ia_estimate.point * tail.point;
    let rel_tail = if tail.point > 0.0 { tail.stderr / tail.point } else { 0.0 };
    let rel = (ia_estimate.stderr / ia_estimate.point).hypot(rel_tail);
    let psi_approx = EstimateWithCI {
        point,
        stderr: point.abs() * rel,
        n: tail.n,
        seed: tail.seed,
        meta: format!("asymptotic ia[{}] tail[{}]", ia_estimate.meta, tail.meta),
    };
    Ok(AsymptoticResult {
        qp,
        ia_estimate,
        lambda_product,
        tail_term: tail,
        psi_approx,
        lambda_horizon,
        u,
        horizon,
    })
}

/// The asymptotic approximation of `ψ_T(au)` for the scenario's level.
///
/// `I_a` and the tail term use separate stream families under `seed`.
pub fn asymptotic_psi(
    scenario: &RuinScenario,
    config: &AsymptoticConfig,
    seed: u64,
) -> Result<AsymptoticResult> {
    scenario.validate()?;
    let unit = to_unit_horizon(scenario);
    let qp = solve_qp(&scenario.model, &unit.barrier)?;
    let (ia, lambda_horizon) = ia_for(&qp, &scenario.model, config, seed)?;
    asymptotic_psi_with_ia(scenario, config, ia, lambda_horizon, seed)
}

/// As [`asymptotic_psi`] with a precomputed `I_a(Λ)` (it does not depend on
/// `u` or the trend).
pub fn asymptotic_psi_with_ia(
    scenario: &RuinScenario,
    config: &AsymptoticConfig,
    ia: EstimateWithCI,
    lambda_horizon: f64,
    seed: u64,
) -> Result<AsymptoticResult> {
    scenario.validate()?;
    let unit = to_unit_horizon(scenario);
    let qp = solve_qp(&scenario.model, &unit.barrier)?;
    let b: Vec<f64> = unit.barrier.iter().map(|a| a * scenario.level).collect();
    let tail = tail_term(&scenario.model, &b, &unit.trend, config.tail_budget, config.trend_draws, seed)?;
    assemble(qp, ia, tail, lambda_horizon, scenario.level, scenario.horizon)
}
