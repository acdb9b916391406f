//! Independent grid-plus-projected-gradient minimizer, used to cross-check
//! the enumeration solver in low dimension.

use crate::error::{Error, Result};
use crate::gaussian::CovarianceModel;

pub const MAX_BRUTEFORCE_DIM: usize = 3;
pub const MIN_GRID: usize = 100;

/// Minimizes `xᵀΣ⁻¹x` over `x ≥ a`: seeds from the best point of a
/// `grid^d` lattice on `[a, a + 5]`, then runs accelerated projected
/// gradient descent on the unbounded feasible set.
pub fn solve_qp_bruteforce(model: &CovarianceModel, a: &[f64], grid: usize) -> Result<Vec<f64>> {
    let d = model.dim();
    if a.len() != d {
        return Err(Error::DimensionMismatch(format!("barrier has length {}, model dimension {d}", a.len())));
    }
    if d > MAX_BRUTEFORCE_DIM {
        return Err(Error::DimensionTooLarge { dim: d, max: MAX_BRUTEFORCE_DIM });
    }
    if grid < MIN_GRID {
        return Err(Error::BudgetTooSmall(format!("grid {grid} below {MIN_GRID}")));
    }
    if a.iter().any(|v| !v.is_finite()) || a.iter().all(|&v| v <= 0.0) {
        return Err(Error::InvalidBarrier(
            "barrier must be finite with a strictly positive component".into(),
        ));
    }
    let p: Vec<f64> = model.sigma_inv().iter().copied().collect(); // column-major, symmetric
    let f = |x: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += x[i] * p[i * d + j] * x[j];
            }
        }
        s
    };

    // Grid seed.
    let step = 5.0 / (grid - 1) as f64;
    let total = grid.pow(d as u32);
    let mut best = a.to_vec();
    let mut best_val = f(&best);
    let mut x = vec![0.0; d];
    for flat in 0..total {
        let mut r = flat;
        for i in 0..d {
            x[i] = a[i] + (r % grid) as f64 * step;
            r /= grid;
        }
        let v = f(&x);
        if v < best_val {
            best_val = v;
            best.copy_from_slice(&x);
        }
    }

    // FISTA with projection onto {x ≥ a}; step 1/L with L = 2·λ_max(Σ⁻¹).
    let lmax = model.sigma_inv().clone().symmetric_eigenvalues().max();
    let eta = 1.0 / (2.0 * lmax);
    let mut xk = best.clone();
    let mut yk = best;
    let mut t = 1.0f64;
    let mut grad = vec![0.0; d];
    for _ in 0..2_000_000 {
        for i in 0..d {
            grad[i] = 2.0 * (0..d).map(|j| p[i * d + j] * yk[j]).sum::<f64>();
        }
        let next: Vec<f64> = (0..d).map(|i| (yk[i] - eta * grad[i]).max(a[i])).collect();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        let moved = next.iter().zip(&xk).map(|(n, o)| (n - o).abs()).fold(0.0, f64::max);
        // Restart momentum whenever the objective goes up.
        if f(&next) > f(&xk) {
            t = 1.0;
            yk = xk.clone();
            continue;
        }
        yk = (0..d).map(|i| (next[i] + momentum * (next[i] - xk[i])).max(a[i])).collect();
        xk = next;
        t = t_next;
        if moved < 1e-15 {
            break;
        }
    }
    Ok(xk)
}
