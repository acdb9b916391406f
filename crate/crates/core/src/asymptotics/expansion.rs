use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{log_density, submatrix, tail_probability, univariate_phibar, CovarianceModel};
use crate::qp::QpSolution;

pub const DEFAULT_EXPANSION_BUDGET: usize = 200_000;

/// Leading-order expansion of `P(W(1) > au + c)`:
///
/// `u^{-|I|} φ_Σ(ãu + c) / ∏_{i∈I} λ_i · ∫_{ℝ^J} 1{x_U ≤ 0} exp(⟨c̃_J, x_J⟩ - ½ x_Jᵀ (Σ⁻¹)_JJ x_J) dx_J`
///
/// with `c̃ = Σ⁻¹c`. Sign constraints on two or more weak coordinates are
/// estimated by Monte Carlo with a default budget and seed 0; see
/// [`uniform_tail_expansion_with`].
pub fn uniform_tail_expansion(model: &CovarianceModel, qp: &QpSolution, u: f64, c: &[f64]) -> Result<f64> {
    uniform_tail_expansion_with(model, qp, u, c, DEFAULT_EXPANSION_BUDGET, 0)
}

pub fn uniform_tail_expansion_with(
    model: &CovarianceModel,
    qp: &QpSolution,
    u: f64,
    c: &[f64],
    budget: usize,
    seed: u64,
) -> Result<f64> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::DomainError(format!("level u = {u} must be positive")));
    }
    let d = model.dim();
    if qp.dim() != d || c.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "model dimension {d}, solution {}, shift {}",
            qp.dim(),
            c.len()
        )));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::DomainError("shift c must be finite".into()));
    }
    let lambda_product = qp.lambda_product();
    if !(lambda_product > 0.0) {
        return Err(Error::NonPositiveLambda(lambda_product));
    }
    let point: Vec<f64> = qp.a_tilde.iter().zip(c).map(|(a, ci)| a * u + ci).collect();
    let k = qp.active_set.len() as f64;
    let log_lead = log_density(model, &point) - k * u.ln() - lambda_product.ln();
    Ok((log_lead + log_complement_integral(model, qp, c, budget, seed)?).exp())
}

/// Log of the `J`-integral, by completing the square:
/// `(2π)^{|J|/2} det(Q)^{-1/2} exp(½ c̃_Jᵀ Q⁻¹ c̃_J) · P(Z_U > m_U)` with
/// `Q = (Σ⁻¹)_JJ`, `m = Q⁻¹ c̃_J` and `Z ~ N(0, (Q⁻¹)_UU)`.
fn log_complement_integral(
    model: &CovarianceModel,
    qp: &QpSolution,
    c: &[f64],
    budget: usize,
    seed: u64,
) -> Result<f64> {
    let j = &qp.complement;
    if j.is_empty() {
        return Ok(0.0);
    }
    let ct = model.precision_times(c);
    let q = submatrix(model.sigma_inv(), j, j);
    let q_inv = q.clone().cholesky().ok_or(Error::SingularMatrix { index: 0, pivot: 0.0 })?.inverse();
    let ct_j = DVector::from_iterator(j.len(), j.iter().map(|&i| ct[i]));
    let m = &q_inv * &ct_j;
    let n = j.len() as f64;
    let log_det_q = q.determinant().ln();
    let mut log_value = 0.5 * n * (2.0 * PI).ln() - 0.5 * log_det_q + 0.5 * ct_j.dot(&m);

    let weak: Vec<usize> = qp
        .weak_set
        .iter()
        .map(|w| j.iter().position(|x| x == w).expect("weak set inside complement"))
        .collect();
    let prob = match weak.len() {
        0 => 1.0,
        1 => {
            let w = weak[0];
            univariate_phibar(m[w] / q_inv[(w, w)].sqrt())
        }
        _ => {
            let cov: DMatrix<f64> = submatrix(&q_inv, &weak, &weak);
            let sub = CovarianceModel::from_covariance(cov)?;
            let b: Vec<f64> = weak.iter().map(|&w| m[w]).collect();
            tail_probability(&sub, &b, budget, seed)?.point
        }
    };
    log_value += prob.ln();
    Ok(log_value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::univariate_pdf;
    use crate::qp::solve_qp;

    #[test]
    fn identity_reference_value() {
        let m = CovarianceModel::identity(2);
        let qp = solve_qp(&m, &[1.0, 1.0]).unwrap();
        let v = uniform_tail_expansion(&m, &qp, 3.0, &[0.0, 0.0]).unwrap();
        let expect = (-9.0f64).exp() / (9.0 * 2.0 * PI);
        assert!((v - expect).abs() < 1e-15);
        assert!((v - 2.1819e-6).abs() < 1e-9);
    }

    #[test]
    fn one_active_coordinate_reduces_to_mills_ratio() {
        // I = {0}, J = {1}, U = ∅: the expansion is φ(u)/u.
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let m = CovarianceModel::from_covariance(sigma).unwrap();
        let qp = solve_qp(&m, &[1.0, 0.3]).unwrap();
        for u in [2.0, 4.0, 6.0] {
            let v = uniform_tail_expansion(&m, &qp, u, &[0.0, 0.0]).unwrap();
            let expect = univariate_pdf(u) / u;
            assert!((v / expect - 1.0).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn weak_coordinate_halves_the_integral() {
        // a = (1, 0.5) puts coordinate 1 in U with m = 0 when c = 0.
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let m = CovarianceModel::from_covariance(sigma).unwrap();
        let qp = solve_qp(&m, &[1.0, 0.5]).unwrap();
        assert_eq!(qp.weak_set, vec![1]);
        let v = uniform_tail_expansion(&m, &qp, 5.0, &[0.0, 0.0]).unwrap();
        let expect = 0.5 * univariate_pdf(5.0) / 5.0;
        assert!((v / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_level() {
        let m = CovarianceModel::identity(1);
        let qp = solve_qp(&m, &[1.0]).unwrap();
        assert!(matches!(uniform_tail_expansion(&m, &qp, 0.0, &[0.0]), Err(Error::DomainError(_))));
    }
}
