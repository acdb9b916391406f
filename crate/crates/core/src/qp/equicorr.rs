//! Closed forms for the equicorrelated covariance `Σ = (1-ρ) I + ρ 11ᵀ`.

use nalgebra::DMatrix;

use super::{solve_qp_with_tolerance, QpSolution, DEFAULT_QP_TOLERANCE};
use crate::error::{Error, Result};
use crate::gaussian::CovarianceModel;

/// Equicorrelated model with barrier `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquicorrSpec {
    pub dim: usize,
    pub rho: f64,
    pub barrier: Vec<f64>,
}

impl EquicorrSpec {
    pub fn new(dim: usize, rho: f64, barrier: Vec<f64>) -> Result<Self> {
        let spec = Self { dim, rho, barrier };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::DomainError(format!("equicorrelated model needs d >= 2, got {}", self.dim)));
        }
        let lo = -1.0 / (self.dim as f64 - 1.0);
        if !(self.rho > lo && self.rho < 1.0) {
            return Err(Error::RhoOutOfRange { rho: self.rho, lo, dim: self.dim });
        }
        if self.barrier.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "barrier has length {}, dimension {}",
                self.barrier.len(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        equicorrelated_covariance(self.dim, self.rho)
    }

    pub fn model(&self) -> Result<CovarianceModel> {
        CovarianceModel::from_covariance(self.covariance())
    }

    /// `Σ⁻¹ x = [x - ρ (1ᵀx) / (1 + ρ(d-1)) · 1] / (1 - ρ)`.
    pub fn precision_times(&self, x: &[f64]) -> Vec<f64> {
        inv_times(self.rho, x)
    }
}

pub fn equicorrelated_covariance(dim: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| if i == j { 1.0 } else { rho })
}

/// Closed-form inverse of the `k`-dimensional equicorrelated matrix applied
/// to `x` (with `k = x.len()`).
fn inv_times(rho: f64, x: &[f64]) -> Vec<f64> {
    let k = x.len() as f64;
    let shift = rho * x.iter().sum::<f64>() / (1.0 + rho * (k - 1.0));
    x.iter().map(|v| (v - shift) / (1.0 - rho)).collect()
}

/// Solves the quadratic program for an equicorrelated covariance.
///
/// By permutation symmetry the active set consists of the largest barrier
/// components, so only the `d` top-`k` sets are examined, each with the
/// closed-form inverse. Falls back to generic enumeration if none passes.
pub fn solve_equicorrelated(spec: &EquicorrSpec) -> Result<QpSolution> {
    spec.validate()?;
    let a = &spec.barrier;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidBarrier("barrier entries must be finite".into()));
    }
    if a.iter().all(|&v| v <= 0.0) {
        return Err(Error::InvalidBarrier(
            "barrier must have at least one strictly positive component".into(),
        ));
    }
    let d = spec.dim;
    let rho = spec.rho;
    let tol = DEFAULT_QP_TOLERANCE;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[j].total_cmp(&a[i]).then(i.cmp(&j)));

    for k in 1..=d {
        let mut active: Vec<usize> = order[..k].to_vec();
        active.sort_unstable();
        let a_i: Vec<f64> = active.iter().map(|&i| a[i]).collect();
        let lambda_i = inv_times(rho, &a_i);
        let scale = lambda_i.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if lambda_i.iter().any(|&v| v <= tol * (1.0 + scale)) {
            continue;
        }
        // Σ_JI λ_I = ρ · 1ᵀλ_I for every j outside I.
        let off = rho * lambda_i.iter().sum::<f64>();
        let complement: Vec<usize> = (0..d).filter(|i| !active.contains(i)).collect();
        let mut feasible = true;
        let mut weak_set = Vec::new();
        let mut a_tilde = a.clone();
        for &j in &complement {
            let slack = tol * (1.0 + a[j].abs());
            if off < a[j] - slack {
                feasible = false;
                break;
            }
            if (off - a[j]).abs() <= slack {
                weak_set.push(j);
            }
            a_tilde[j] = off;
        }
        if !feasible {
            continue;
        }
        let mut lambda = vec![0.0; d];
        for (&i, li) in active.iter().zip(&lambda_i) {
            lambda[i] = *li;
        }
        let objective = a_i.iter().zip(&lambda_i).map(|(x, l)| x * l).sum();
        return Ok(QpSolution { a_tilde, active_set: active, complement, weak_set, lambda, objective });
    }
    solve_qp_with_tolerance(&spec.model()?, a, tol)
}

fn check_sorted(spec: &EquicorrSpec) -> Result<()> {
    spec.validate()?;
    let a = &spec.barrier;
    if !(a[0] > 0.0) {
        return Err(Error::DomainError("largest barrier component must be positive".into()));
    }
    if a.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::DomainError("barrier must be sorted in descending order".into()));
    }
    Ok(())
}

/// Whether every coordinate is active, decided by `Σ⁻¹a > 0`.
pub fn full_index_condition(spec: &EquicorrSpec) -> Result<bool> {
    check_sorted(spec)?;
    let lambda = spec.precision_times(&spec.barrier);
    let scale = lambda.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(lambda.iter().all(|&v| v > DEFAULT_QP_TOLERANCE * (1.0 + scale)))
}

/// The inequality `a_d > Σ a_i / (1 + ρ(d-1))` as it is commonly printed.
///
/// It disagrees with [`full_index_condition`] for equal components (it is
/// never satisfied there for `ρ < 1`), so it is reported for comparison only.
pub fn printed_full_index_inequality(spec: &EquicorrSpec) -> Result<bool> {
    check_sorted(spec)?;
    let d = spec.dim as f64;
    let sum: f64 = spec.barrier.iter().sum();
    Ok(spec.barrier[spec.dim - 1] > sum / (1.0 + spec.rho * (d - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp::solve_qp;

    #[test]
    fn equal_components() {
        let spec = EquicorrSpec::new(3, 0.25, vec![1.0; 3]).unwrap();
        let s = solve_equicorrelated(&spec).unwrap();
        assert_eq!(s.active_set, vec![0, 1, 2]);
        for l in &s.lambda {
            assert!((l - 2.0 / 3.0).abs() < 1e-12);
        }
        assert!(full_index_condition(&spec).unwrap());
        assert!(!printed_full_index_inequality(&spec).unwrap());
    }

    #[test]
    fn two_dimensional_cases() {
        let spec = EquicorrSpec::new(2, 0.5, vec![1.0, 0.8]).unwrap();
        let s = solve_equicorrelated(&spec).unwrap();
        assert!((s.lambda[0] - 0.8).abs() < 1e-12 && (s.lambda[1] - 0.4).abs() < 1e-12);

        let spec = EquicorrSpec::new(2, 0.5, vec![1.0, 0.3]).unwrap();
        assert!(!full_index_condition(&spec).unwrap());
        let spec = EquicorrSpec::new(2, 0.0, vec![1.0, 1.0]).unwrap();
        assert!(full_index_condition(&spec).unwrap());
    }

    #[test]
    fn unsorted_barrier_is_unpermuted() {
        let spec = EquicorrSpec::new(3, 0.6, vec![0.1, 1.0, 0.9]).unwrap();
        let fast = solve_equicorrelated(&spec).unwrap();
        let slow = solve_qp(&spec.model().unwrap(), &spec.barrier).unwrap();
        assert_eq!(fast.active_set, slow.active_set);
        for (x, y) in fast.a_tilde.iter().zip(&slow.a_tilde) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn independence_matches_identity() {
        for a in [[1.0, 0.2], [0.5, -3.0], [2.0, 2.0]] {
            let spec = EquicorrSpec::new(2, 0.0, a.to_vec()).unwrap();
            let s = solve_equicorrelated(&spec).unwrap();
            let t = solve_qp(&CovarianceModel::identity(2), &a).unwrap();
            assert_eq!(s.active_set, t.active_set);
            for (x, y) in s.lambda.iter().zip(&t.lambda) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rho_range() {
        assert!(matches!(EquicorrSpec::new(3, -0.5, vec![1.0; 3]), Err(Error::RhoOutOfRange { .. })));
        assert!(matches!(EquicorrSpec::new(3, 1.0, vec![1.0; 3]), Err(Error::RhoOutOfRange { .. })));
        assert!(EquicorrSpec::new(3, -0.49, vec![1.0; 3]).is_ok());
    }
}
