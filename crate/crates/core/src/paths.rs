//! Discretized correlated Brownian paths with linear drift.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// `X(t_k) = drift · t_k + L B(t_k)` on a uniform grid with step `dt`.
#[derive(Debug, Clone)]
pub(crate) struct GridWalk {
    dim: usize,
    /// Row-major lower Cholesky factor scaled by `√dt`.
    scaled_chol: Vec<f64>,
    drift_step: Vec<f64>,
}

impl GridWalk {
    pub fn new(chol_rows: &[f64], dim: usize, drift: &[f64], dt: f64) -> Self {
        let s = dt.sqrt();
        Self {
            dim,
            scaled_chol: chol_rows.iter().map(|v| v * s).collect(),
            drift_step: drift.iter().map(|v| v * dt).collect(),
        }
    }

    /// Replaces the drift vector.
    pub fn set_drift(&mut self, drift: &[f64], dt: f64) {
        for (s, d) in self.drift_step.iter_mut().zip(drift) {
            *s = d * dt;
        }
    }

    /// Advances `state` by one step; `z` is scratch space of length `dim`.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64], state: &mut [f64]) {
        let d = self.dim;
        if d == 1 {
            let n: f64 = StandardNormal.sample(rng);
            state[0] += self.scaled_chol[0] * n + self.drift_step[0];
            return;
        }
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(rng);
        }
        for (i, x) in state.iter_mut().enumerate().take(d) {
            let row = &self.scaled_chol[i * d..i * d + i + 1];
            let mut inc = self.drift_step[i];
            for (l, zj) in row.iter().zip(z.iter()) {
                inc += l * zj;
            }
            *x += inc;
        }
    }
}
