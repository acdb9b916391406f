//! The quadratic program `minimize xᵀΣ⁻¹x subject to x ≥ a`.
//!
//! The optimizer is characterized by a unique nonempty index set `I`:
//! `ã_I = a_I` with `(Σ_II)⁻¹ a_I > 0`, and `ã_J = Σ_JI (Σ_II)⁻¹ a_I ≥ a_J` on
//! the complement `J`. Conversely any set passing both tests yields the
//! optimizer, so [`solve_qp`] enumerates candidate sets by increasing size and
//! returns the first one that passes.

pub mod bruteforce;
mod equicorr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{cholesky, submatrix, CovarianceModel};

pub use bruteforce::solve_qp_bruteforce;
pub use equicorr::{
    equicorrelated_covariance, full_index_condition, printed_full_index_inequality, solve_equicorrelated,
    EquicorrSpec,
};

/// Largest dimension accepted by the enumeration solver.
pub const MAX_QP_DIM: usize = 20;
/// Default relative tolerance of the activity and positivity tests.
pub const DEFAULT_QP_TOLERANCE: f64 = 1e-10;

/// Solution of the quadratic program for barrier `a`. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    /// Optimizer `ã`.
    pub a_tilde: Vec<f64>,
    /// Active set `I`, sorted.
    pub active_set: Vec<usize>,
    /// `J = I^c`, sorted.
    pub complement: Vec<usize>,
    /// Weakly active coordinates `U = {i ∈ J : ã_i = a_i}`.
    pub weak_set: Vec<usize>,
    /// `λ = Σ⁻¹ã`, zero on `J`.
    pub lambda: Vec<f64>,
    /// `ãᵀΣ⁻¹ã`.
    pub objective: f64,
}

impl QpSolution {
    pub fn dim(&self) -> usize {
        self.a_tilde.len()
    }

    /// `∏_{i∈I} λ_i`.
    pub fn lambda_product(&self) -> f64 {
        self.active_set.iter().map(|&i| self.lambda[i]).product()
    }

    pub fn lambda_active(&self) -> Vec<f64> {
        self.active_set.iter().map(|&i| self.lambda[i]).collect()
    }

    /// The solution for barrier `s·a`, `s > 0`: `ã`, `λ` scale by `s`, the
    /// objective by `s²`, and the index sets are unchanged.
    pub fn scaled(&self, s: f64) -> QpSolution {
        QpSolution {
            a_tilde: self.a_tilde.iter().map(|v| v * s).collect(),
            active_set: self.active_set.clone(),
            complement: self.complement.clone(),
            weak_set: self.weak_set.clone(),
            lambda: self.lambda.iter().map(|v| v * s).collect(),
            objective: self.objective * s * s,
        }
    }
}

fn validate_barrier(model: &CovarianceModel, a: &[f64]) -> Result<()> {
    if a.len() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "barrier has length {}, model dimension {}",
            a.len(),
            model.dim()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidBarrier("barrier entries must be finite".into()));
    }
    if a.iter().all(|&v| v <= 0.0) {
        return Err(Error::InvalidBarrier(
            "barrier must have at least one strictly positive component".into(),
        ));
    }
    if model.dim() > MAX_QP_DIM {
        return Err(Error::DimensionTooLarge { dim: model.dim(), max: MAX_QP_DIM });
    }
    Ok(())
}

/// Solves the quadratic program with the default tolerance.
pub fn solve_qp(model: &CovarianceModel, a: &[f64]) -> Result<QpSolution> {
    solve_qp_with_tolerance(model, a, DEFAULT_QP_TOLERANCE)
}

pub fn solve_qp_with_tolerance(model: &CovarianceModel, a: &[f64], tol: f64) -> Result<QpSolution> {
    validate_barrier(model, a)?;
    let d = model.dim();
    for k in 1..=d {
        let mut found = None;
        for_each_subset(d, k, |set| match check_candidate(model.sigma(), a, set, tol) {
            Some(sol) => {
                found = Some(sol);
                false
            }
            None => true,
        });
        if let Some(sol) = found {
            return Ok(sol);
        }
    }
    Err(Error::NoFeasibleSet)
}

/// Every index set passing both optimality tests. Uniqueness of the
/// optimizer means this has exactly one element for well-conditioned input.
pub fn passing_sets(model: &CovarianceModel, a: &[f64], tol: f64) -> Result<Vec<Vec<usize>>> {
    validate_barrier(model, a)?;
    let d = model.dim();
    let mut out = Vec::new();
    for k in 1..=d {
        for_each_subset(d, k, |set| {
            if check_candidate(model.sigma(), a, set, tol).is_some() {
                out.push(set.to_vec());
            }
            true
        });
    }
    Ok(out)
}

/// Tests the converse optimality conditions for candidate `I` and builds the
/// solution when both hold.
pub(crate) fn check_candidate(
    sigma: &DMatrix<f64>,
    a: &[f64],
    active: &[usize],
    tol: f64,
) -> Option<QpSolution> {
    let d = a.len();
    let sigma_ii = submatrix(sigma, active, active);
    let l = cholesky(&sigma_ii).ok()?;
    let a_i = DVector::from_iterator(active.len(), active.iter().map(|&i| a[i]));
    let y = l.solve_lower_triangular(&a_i)?;
    let lambda_i = l.transpose().solve_upper_triangular(&y)?;

    let scale = lambda_i.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pos_margin = tol * (1.0 + scale);
    if lambda_i.iter().any(|&v| v <= pos_margin) {
        return None;
    }

    let complement: Vec<usize> = (0..d).filter(|i| !active.contains(i)).collect();
    let mut a_tilde = a.to_vec();
    let mut weak_set = Vec::new();
    for &j in &complement {
        let v: f64 = active.iter().zip(lambda_i.iter()).map(|(&i, li)| sigma[(j, i)] * li).sum();
        let slack = tol * (1.0 + a[j].abs());
        if v < a[j] - slack {
            return None;
        }
        if (v - a[j]).abs() <= slack {
            weak_set.push(j);
        }
        a_tilde[j] = v;
    }

    let mut lambda = vec![0.0; d];
    for (&i, li) in active.iter().zip(lambda_i.iter()) {
        lambda[i] = *li;
    }
    let objective = active.iter().zip(lambda_i.iter()).map(|(&i, li)| a[i] * li).sum();
    Some(QpSolution { a_tilde, active_set: active.to_vec(), complement, weak_set, lambda, objective })
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order until it
/// returns `false`.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) {
    if k == 0 || k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if !f(&idx) {
            return;
        }
        let mut i = k;
        while i > 0 {
            i -= 1;
            if idx[i] != i + n - k {
                idx[i] += 1;
                for j in (i + 1)..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return;
            }
        }
    }
}
