//! Monte Carlo estimation of the constant
//! `I_a(Λ) = ∫ P(∃t ∈ [0,Λ]: W_I(t) - a_I t > x) e^{⟨λ_I, x⟩} dx`.
//!
//! Each simulated path contributes the exact integral of `e^{⟨λ,x⟩}` over the
//! set of `x` it ruins, which is the union of lower orthants anchored at its
//! Pareto-maximal grid points. Averaging that over paths estimates `I_a(Λ)`
//! (the integrand is nonnegative, so expectation and integral commute).

use serde::{Deserialize, Serialize};

use super::frontier::{PathFrontier, MAX_FRONTIER_DIM};
use crate::error::{Error, Result};
use crate::estimate::{EstimateWithCI, Moments};
use crate::gaussian::CovarianceModel;
use crate::paths::GridWalk;
use crate::qp::QpSolution;
use crate::rng::{map_chunks, StreamKey};

pub const MIN_STEPS_PER_UNIT: usize = 256;
pub const MIN_IA_PATHS: usize = 1000;
/// Relative increment below which horizon doubling stops.
pub const HORIZON_REL_INCREMENT: f64 = 0.005;
const PATH_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaConfig {
    /// Horizon `Λ`.
    pub horizon: f64,
    /// Grid points per unit of time.
    pub steps_per_unit: usize,
    pub n_paths: usize,
}

impl Default for IaConfig {
    fn default() -> Self {
        Self { horizon: 20.0, steps_per_unit: 4096, n_paths: 100_000 }
    }
}

/// Restriction of the problem to the active coordinates.
struct ActiveProblem {
    dim: usize,
    chol_rows: Vec<f64>,
    drift: Vec<f64>,
    lambda: Vec<f64>,
    a: Vec<f64>,
    variances: Vec<f64>,
}

impl ActiveProblem {
    fn new(qp: &QpSolution, model: &CovarianceModel) -> Result<Self> {
        if qp.dim() != model.dim() {
            return Err(Error::DimensionMismatch(format!(
                "solution dimension {} vs model dimension {}",
                qp.dim(),
                model.dim()
            )));
        }
        let active = &qp.active_set;
        let sub = model.marginal(active)?;
        let lambda = qp.lambda_active();
        if let Some(&l) = lambda.iter().find(|&&l| !(l > 0.0)) {
            return Err(Error::NonPositiveLambda(l));
        }
        let a: Vec<f64> = active.iter().map(|&i| qp.a_tilde[i]).collect();
        Ok(Self {
            dim: active.len(),
            chol_rows: sub.chol_rows(),
            drift: a.iter().map(|v| -v).collect(),
            variances: active.iter().map(|&i| model.sigma()[(i, i)]).collect(),
            lambda,
            a,
        })
    }
}

fn check_budgets(steps_per_unit: usize, n_paths: usize, horizons: &[f64]) -> Result<()> {
    if steps_per_unit < MIN_STEPS_PER_UNIT {
        return Err(Error::BudgetTooSmall(format!(
            "{steps_per_unit} steps per unit below {MIN_STEPS_PER_UNIT}"
        )));
    }
    if n_paths < MIN_IA_PATHS {
        return Err(Error::BudgetTooSmall(format!("{n_paths} paths below {MIN_IA_PATHS}")));
    }
    if horizons.is_empty() {
        return Err(Error::DomainError("no horizons requested".into()));
    }
    if horizons.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
        return Err(Error::DomainError("horizons must be finite and >= 0".into()));
    }
    if horizons.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::DomainError("horizons must be non-decreasing".into()));
    }
    Ok(())
}

fn steps_for(horizon: f64, steps_per_unit: usize) -> usize {
    (horizon * steps_per_unit as f64).round() as usize
}

/// Estimates `I_a(Λ)` for `|I| ≤ 3`.
pub fn estimate_ia(
    qp: &QpSolution,
    model: &CovarianceModel,
    config: &IaConfig,
    seed: u64,
) -> Result<EstimateWithCI> {
    let mut out =
        estimate_ia_horizons(qp, model, &[config.horizon], config.steps_per_unit, config.n_paths, seed)?;
    Ok(out.pop().expect("one horizon"))
}

/// Estimates `I_a(Λ)` at several horizons from one set of paths.
///
/// Path `k` is driven by its own stream, so longer horizons extend the same
/// paths and the estimates are non-decreasing in `Λ` path by path.
pub fn estimate_ia_horizons(
    qp: &QpSolution,
    model: &CovarianceModel,
    horizons: &[f64],
    steps_per_unit: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<EstimateWithCI>> {
    let prob = ActiveProblem::new(qp, model)?;
    if prob.dim > MAX_FRONTIER_DIM {
        return Err(Error::DimensionTooLarge { dim: prob.dim, max: MAX_FRONTIER_DIM });
    }
    check_budgets(steps_per_unit, n_paths, horizons)?;

    let checkpoints: Vec<usize> = horizons.iter().map(|&h| steps_for(h, steps_per_unit)).collect();
    let total_steps = *checkpoints.last().expect("non-empty");
    let dt = 1.0 / steps_per_unit as f64;
    let walk = GridWalk::new(&prob.chol_rows, prob.dim, &prob.drift, dt);
    let key = StreamKey::new(seed, "ia.paths");
    let d = prob.dim;

    let parts = map_chunks(n_paths, PATH_CHUNK, |_c, start, len| -> Result<Vec<Moments>> {
        let mut acc = vec![Moments::default(); checkpoints.len()];
        let mut z = vec![0.0; d];
        let mut state = vec![0.0; d];
        for path in start..start + len {
            let mut rng = key.path_rng(path as u64);
            state.iter_mut().for_each(|v| *v = 0.0);
            let mut frontier = PathFrontier::new(d);
            frontier.insert(&state);
            let mut next_cp = 0;
            let mut step = 0;
            loop {
                while next_cp < checkpoints.len() && checkpoints[next_cp] == step {
                    acc[next_cp].push(frontier.exp_integral(&prob.lambda)?);
                    next_cp += 1;
                }
                if step == total_steps {
                    break;
                }
                walk.step(&mut rng, &mut z, &mut state);
                frontier.insert(&state);
                step += 1;
            }
        }
        Ok(acc)
    });

    let mut merged = vec![Moments::default(); checkpoints.len()];
    for part in parts {
        for (m, p) in merged.iter_mut().zip(part?) {
            m.merge(&p);
        }
    }
    Ok(merged
        .iter()
        .zip(horizons)
        .map(|(m, h)| {
            EstimateWithCI::from_moments(
                m,
                seed,
                format!("frontier-exact |I|={d} horizon={h} steps_per_unit={steps_per_unit}"),
            )
        })
        .collect())
}

/// Outcome of [`estimate_ia_extended`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaExtension {
    pub estimate: EstimateWithCI,
    /// Horizon the returned estimate belongs to.
    pub horizon: f64,
    /// `(Λ, estimate)` for every horizon visited.
    pub trail: Vec<(f64, f64)>,
    /// Whether the relative increment criterion was met before `max_horizon`.
    pub converged: bool,
}

/// Doubles `Λ` from `config.horizon` until the estimate grows by less than
/// 0.5% relative, or `max_horizon` is reached. Routes `|I| > 3` to the
/// quadrature estimator.
pub fn estimate_ia_extended(
    qp: &QpSolution,
    model: &CovarianceModel,
    config: &IaConfig,
    max_horizon: f64,
    seed: u64,
) -> Result<IaExtension> {
    let mut h = config.horizon;
    let mut trail = Vec::new();
    loop {
        let pair = estimate_ia_any(qp, model, &[h, 2.0 * h], config, seed)?;
        let (lo, hi) = (&pair[0], &pair[1]);
        if trail.is_empty() {
            trail.push((h, lo.point));
        }
        trail.push((2.0 * h, hi.point));
        let converged = hi.point - lo.point <= HORIZON_REL_INCREMENT * lo.point.abs();
        if converged || 4.0 * h > max_horizon || h == 0.0 {
            return Ok(IaExtension { estimate: hi.clone(), horizon: 2.0 * h, trail, converged });
        }
        h *= 2.0;
    }
}

fn estimate_ia_any(
    qp: &QpSolution,
    model: &CovarianceModel,
    horizons: &[f64],
    config: &IaConfig,
    seed: u64,
) -> Result<Vec<EstimateWithCI>> {
    if qp.active_set.len() <= MAX_FRONTIER_DIM {
        estimate_ia_horizons(qp, model, horizons, config.steps_per_unit, config.n_paths, seed)
    } else {
        horizons
            .iter()
            .map(|&h| {
                let q = QuadratureConfig {
                    horizon: h,
                    steps_per_unit: config.steps_per_unit,
                    inner_paths: config.n_paths,
                    ..QuadratureConfig::default()
                };
                estimate_ia_quadrature(qp, model, &q, seed).map(|r| r.estimate)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub horizon: f64,
    pub steps_per_unit: usize,
    /// Nodes per coordinate.
    pub grid: usize,
    pub inner_paths: usize,
    /// Lower corner of the box; defaults to `-12 / min λ_i` in every coordinate.
    pub x_lo: Option<Vec<f64>>,
    /// Upper corner; defaults to a level where the crossing probability bound
    /// is below `1e-6`.
    pub x_hi: Option<Vec<f64>>,
    /// Cap on `grid^|I| · inner_paths`.
    pub max_evaluations: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            horizon: 20.0,
            steps_per_unit: 1024,
            grid: 16,
            inner_paths: 2000,
            x_lo: None,
            x_hi: None,
            max_evaluations: 1e9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    /// Combined Monte Carlo and quadrature error in `stderr`.
    pub estimate: EstimateWithCI,
    pub mc_stderr: f64,
    pub quadrature_error: f64,
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    /// Bound on the crossing probability at `x_hi`, relative to the estimate.
    pub truncation_audit: f64,
}

const TRUNCATION_LEVEL: f64 = 1e-6;

/// Upper bound on `P(sup_t W_i(t) - a_i t > x)` for one coordinate.
fn crossing_bound(a: f64, var: f64, x: f64) -> f64 {
    if a > 0.0 && x > 0.0 {
        (-2.0 * a * x / var).exp()
    } else {
        1.0
    }
}

/// Tensor-grid quadrature for `I_a(Λ)` in the variables `y_i = e^{λ_i x_i}`,
/// in which the weight `e^{⟨λ,x⟩} dx` becomes `dy / ∏λ_i`.
///
/// The crossing probability at each node is estimated from shared paths, and
/// each path contributes the weighted count of nodes it ruins. The
/// quadrature error is estimated by comparison with the half-resolution
/// grid.
pub fn estimate_ia_quadrature(
    qp: &QpSolution,
    model: &CovarianceModel,
    config: &QuadratureConfig,
    seed: u64,
) -> Result<QuadratureResult> {
    let prob = ActiveProblem::new(qp, model)?;
    let m = prob.dim;
    check_budgets(config.steps_per_unit, config.inner_paths.max(MIN_IA_PATHS), &[config.horizon])?;
    if config.inner_paths == 0 || config.grid < 3 {
        return Err(Error::BudgetTooSmall("need grid >= 3 and at least one path".into()));
    }
    let evaluations = (config.grid as f64).powi(m as i32) * config.inner_paths as f64;
    if evaluations > config.max_evaluations {
        return Err(Error::BudgetTooSmall(format!(
            "{evaluations:e} node-path evaluations exceed the cap {:e}",
            config.max_evaluations
        )));
    }

    let min_lambda = prob.lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let x_lo = config.x_lo.clone().unwrap_or_else(|| vec![-12.0 / min_lambda; m]);
    let x_hi = config.x_hi.clone().unwrap_or_else(|| {
        (0..m)
            .map(|i| {
                let (a, var, l) = (prob.a[i], prob.variances[i], prob.lambda[i]);
                if a > 0.0 {
                    let rate = 2.0 * a / var;
                    let by_bound = var * (1.0 / TRUNCATION_LEVEL).ln() / (2.0 * a);
                    let by_weight = if rate > l { (1.0 / TRUNCATION_LEVEL).ln() / (rate - l) } else { 0.0 };
                    by_bound.max(by_weight).min(60.0 / l)
                } else {
                    30.0 / l
                }
            })
            .collect()
    });
    if x_lo.len() != m || x_hi.len() != m || x_lo.iter().zip(&x_hi).any(|(l, h)| !(l < h)) {
        return Err(Error::DomainError("quadrature box must satisfy x_lo < x_hi".into()));
    }

    let g = config.grid;
    let nodes: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..g).map(|j| x_lo[i] + (x_hi[i] - x_lo[i]) * j as f64 / (g - 1) as f64).collect())
        .collect();
    let fine_w: Vec<Vec<f64>> = (0..m).map(|i| trapezoid_weights(&nodes[i], prob.lambda[i], 1)).collect();
    let coarse_w: Vec<Vec<f64>> = (0..m).map(|i| trapezoid_weights(&nodes[i], prob.lambda[i], 2)).collect();
    let fine = tensor(&fine_w);
    let coarse = tensor(&coarse_w);

    let total_steps = steps_for(config.horizon, config.steps_per_unit);
    let walk = GridWalk::new(&prob.chol_rows, m, &prob.drift, 1.0 / config.steps_per_unit as f64);
    let key = StreamKey::new(seed, "ia.paths");
    let cells = fine.len();

    let parts = map_chunks(config.inner_paths, PATH_CHUNK, |_c, start, len| {
        let mut acc_fine = Moments::default();
        let mut acc_coarse = Moments::default();
        let mut z = vec![0.0; m];
        let mut state = vec![0.0; m];
        let mut crossed = vec![false; cells];
        for path in start..start + len {
            let mut rng = key.path_rng(path as u64);
            state.iter_mut().for_each(|v| *v = 0.0);
            let mut frontier = PathFrontier::new(m);
            frontier.insert(&state);
            for _ in 0..total_steps {
                walk.step(&mut rng, &mut z, &mut state);
                frontier.insert(&state);
            }
            mark_ruined_nodes(&frontier.points(), &nodes, &mut crossed);
            let (mut sf, mut sc) = (0.0, 0.0);
            for (k, &hit) in crossed.iter().enumerate() {
                if hit {
                    sf += fine[k];
                    sc += coarse[k];
                }
            }
            acc_fine.push(sf);
            acc_coarse.push(sc);
        }
        (acc_fine, acc_coarse)
    });
    let mut mf = Moments::default();
    let mut mc = Moments::default();
    for (f, c) in &parts {
        mf.merge(f);
        mc.merge(c);
    }
    let norm: f64 = prob.lambda.iter().product();
    let point = mf.mean() / norm;
    let mc_stderr = mf.stderr() / norm;
    // Trapezoid error is O(h²): fine − exact ≈ (fine − coarse) / 3.
    let quadrature_error = ((mf.mean() - mc.mean()) / norm).abs() / 3.0;
    let bound = (0..m).map(|i| crossing_bound(prob.a[i], prob.variances[i], x_hi[i])).fold(1.0, f64::min);
    let truncation_audit = if point > 0.0 { bound / point } else { f64::INFINITY };
    let estimate = EstimateWithCI {
        point,
        stderr: mc_stderr.hypot(quadrature_error),
        n: mf.count(),
        seed,
        meta: format!(
            "quadrature |I|={m} grid={g} horizon={} steps_per_unit={}",
            config.horizon, config.steps_per_unit
        ),
    };
    Ok(QuadratureResult { estimate, mc_stderr, quadrature_error, x_lo, x_hi, truncation_audit })
}

/// Trapezoid weights in `y = e^{λx}` for nodes `x_0 < … < x_{g-1}`, using
/// every `stride`-th node (others get weight zero). The strip `(0, y_0)` is
/// assigned to the first node.
fn trapezoid_weights(x: &[f64], lambda: f64, stride: usize) -> Vec<f64> {
    let used: Vec<usize> = (0..x.len()).step_by(stride).collect();
    let y: Vec<f64> = used.iter().map(|&j| (lambda * x[j]).exp()).collect();
    let mut w = vec![0.0; x.len()];
    let k = used.len();
    for (pos, &j) in used.iter().enumerate() {
        let left = if pos == 0 { y[0] } else { 0.5 * (y[pos] - y[pos - 1]) };
        let right = if pos + 1 < k { 0.5 * (y[pos + 1] - y[pos]) } else { 0.0 };
        w[j] = left + right;
    }
    w
}

/// Row-major (first coordinate slowest) outer product of per-axis weights.
fn tensor(axes: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![1.0];
    for w in axes {
        let mut next = Vec::with_capacity(out.len() * w.len());
        for &o in &out {
            for &v in w {
                next.push(o * v);
            }
        }
        out = next;
    }
    out
}

/// Marks every node `x` with `x < v` componentwise for some frontier point
/// `v`: mark each point's corner cell, then close downward along each axis.
fn mark_ruined_nodes(frontier: &[Vec<f64>], nodes: &[Vec<f64>], crossed: &mut [bool]) {
    crossed.iter_mut().for_each(|c| *c = false);
    let m = nodes.len();
    let g = nodes[0].len();
    'points: for v in frontier {
        let mut flat = 0;
        for i in 0..m {
            let below = nodes[i].partition_point(|&x| x < v[i]);
            if below == 0 {
                continue 'points;
            }
            flat = flat * g + (below - 1);
        }
        crossed[flat] = true;
    }
    // Suffix-OR along each axis.
    let mut stride = 1;
    for _ in 0..m {
        let block = stride * g;
        for base in (0..crossed.len()).step_by(block) {
            for off in 0..stride {
                for j in (0..g - 1).rev() {
                    let here = base + j * stride + off;
                    let above = here + stride;
                    if crossed[above] {
                        crossed[here] = true;
                    }
                }
            }
        }
        stride *= g;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp::solve_qp;

    fn one_dim_problem() -> (QpSolution, CovarianceModel) {
        let model = CovarianceModel::identity(1);
        (solve_qp(&model, &[1.0]).unwrap(), model)
    }

    #[test]
    fn zero_horizon_is_exactly_one() {
        let (qp, model) = one_dim_problem();
        let cfg = IaConfig { horizon: 0.0, steps_per_unit: 256, n_paths: 1000 };
        let e = estimate_ia(&qp, &model, &cfg, 1).unwrap();
        assert_eq!(e.point, 1.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn horizons_are_path_monotone() {
        let model = CovarianceModel::identity(2);
        let qp = solve_qp(&model, &[1.0, 1.0]).unwrap();
        let est = estimate_ia_horizons(&qp, &model, &[1.0, 2.0, 4.0], 256, 2000, 5).unwrap();
        assert!(est[0].point <= est[1].point && est[1].point <= est[2].point);
        let single =
            estimate_ia(&qp, &model, &IaConfig { horizon: 2.0, steps_per_unit: 256, n_paths: 2000 }, 5)
                .unwrap();
        assert_eq!(single.point, est[1].point);
    }

    #[test]
    fn budget_checks() {
        let (qp, model) = one_dim_problem();
        let cfg = IaConfig { horizon: 1.0, steps_per_unit: 100, n_paths: 1000 };
        assert!(matches!(estimate_ia(&qp, &model, &cfg, 1), Err(Error::BudgetTooSmall(_))));
        let big = CovarianceModel::identity(4);
        let qp4 = solve_qp(&big, &[1.0; 4]).unwrap();
        let cfg = IaConfig { horizon: 1.0, steps_per_unit: 256, n_paths: 1000 };
        assert!(matches!(estimate_ia(&qp4, &big, &cfg, 1), Err(Error::DimensionTooLarge { .. })));
        let q = QuadratureConfig { grid: 100, inner_paths: 1_000_000, ..Default::default() };
        assert!(matches!(estimate_ia_quadrature(&qp4, &big, &q, 1), Err(Error::BudgetTooSmall(_))));
    }

    #[test]
    fn node_marking_matches_brute_force() {
        let nodes = vec![vec![-1.0, 0.0, 1.0, 2.0], vec![-1.0, 0.0, 1.0, 2.0]];
        let frontier = vec![vec![1.5, -0.5], vec![0.5, 1.5]];
        let mut crossed = vec![false; 16];
        mark_ruined_nodes(&frontier, &nodes, &mut crossed);
        for i in 0..4 {
            for j in 0..4 {
                let x = [nodes[0][i], nodes[1][j]];
                let expect = frontier.iter().any(|v| x[0] < v[0] && x[1] < v[1]);
                assert_eq!(crossed[i * 4 + j], expect, "node {x:?}");
            }
        }
    }

    #[test]
    fn trapezoid_weights_integrate_the_exponential() {
        // Σ_j w_j = y at the last node, i.e. ∫_0^{y_max} dy.
        let x: Vec<f64> = (0..9).map(|j| -4.0 + j as f64).collect();
        for stride in [1, 2] {
            let w = trapezoid_weights(&x, 0.7, stride);
            let total: f64 = w.iter().sum();
            assert!((total - (0.7f64 * 4.0).exp()).abs() < 1e-12);
        }
    }
    #[test]
    fn quadrature_agrees_with_frontier_estimator() {
        let (qp, model) = one_dim_problem();
        let q = QuadratureConfig {
            horizon: 10.0,
            steps_per_unit: 512,
            grid: 24,
            inner_paths: 2000,
            ..Default::default()
        };
        let quad = estimate_ia_quadrature(&qp, &model, &q, 3).unwrap();
        let direct =
            estimate_ia(&qp, &model, &IaConfig { horizon: 10.0, steps_per_unit: 512, n_paths: 4000 }, 3)
                .unwrap();
        assert!(quad.estimate.z_distance(&direct) < 3.0, "{quad:?} vs {direct:?}");
        assert!(quad.truncation_audit < 1e-3);

        let model2 = CovarianceModel::identity(2);
        let qp2 = solve_qp(&model2, &[1.0, 1.0]).unwrap();
        let q2 = QuadratureConfig {
            horizon: 5.0,
            steps_per_unit: 256,
            grid: 12,
            inner_paths: 1000,
            ..Default::default()
        };
        let quad2 = estimate_ia_quadrature(&qp2, &model2, &q2, 4).unwrap();
        let direct2 =
            estimate_ia(&qp2, &model2, &IaConfig { horizon: 5.0, steps_per_unit: 256, n_paths: 4000 }, 4)
                .unwrap();
        assert!(quad2.estimate.z_distance(&direct2) < 3.0, "{quad2:?} vs {direct2:?}");
    }
}
