//! Ruin probabilities too small for crude sampling, by a change of drift.
//!
//! Under the drift `μ`, `W(t) - μt` is a driftless Brownian motion with
//! covariance `Σ`, and on `{τ ≤ T}` the likelihood ratio at the first grid
//! crossing `τ` is `exp(-κᵀW(τ) + ½ τ κᵀμ)` with `κ = Σ⁻¹μ`. Choosing `μ` so
//! that the drifted path ends at the optimizer `ã` of the quadratic program
//! makes the rare event typical.

use super::driver::PathDriver;
use super::scenario::RuinScenario;
use crate::error::{Error, Result};
use crate::estimate::{EstimateWithCI, Moments};
use crate::gaussian::TILT_SWITCH_LEVEL;
use crate::qp::solve_qp;
use crate::rng::{map_chunks, CHUNK_SIZE};

/// Whether the crude estimator is likely to see too few crossings: some
/// standardized barrier component `a_i u / √(T Σ_ii)` exceeds 2.
pub fn needs_tilting(scenario: &RuinScenario) -> bool {
    let sd = scenario.model.std_devs();
    let s = scenario.horizon.sqrt();
    scenario.barrier.iter().zip(&sd).any(|(a, sig)| a * scenario.level / (sig * s) > TILT_SWITCH_LEVEL)
}

/// Drift `μ = ã(b)/T` for the barrier `b = au + E[η]T`.
pub fn tilt_drift(scenario: &RuinScenario) -> Result<Vec<f64>> {
    let t = scenario.horizon;
    let mean = scenario.trend.mean();
    let b: Vec<f64> = scenario.barrier.iter().zip(&mean).map(|(a, m)| a * scenario.level + m * t).collect();
    if b.iter().all(|&v| v <= 0.0) {
        return Err(Error::InvalidBarrier(
            "shifted barrier has no positive component; tilting is not needed".into(),
        ));
    }
    let qp = solve_qp(&scenario.model, &b)?;
    Ok(qp.a_tilde.iter().map(|v| v / t).collect())
}

/// Importance-sampled estimate of `ψ_T(au)` on the same grid as
/// [`super::simulate_ruin`], using the drift from [`tilt_drift`].
pub fn simulate_ruin_tilted(scenario: &RuinScenario) -> Result<EstimateWithCI> {
    scenario.validate()?;
    let mu = tilt_drift(scenario)?;
    simulate_ruin_with_drift(scenario, &mu)
}

/// Importance-sampled estimate under an arbitrary extra drift `μ`.
pub fn simulate_ruin_with_drift(scenario: &RuinScenario, mu: &[f64]) -> Result<EstimateWithCI> {
    scenario.validate()?;
    if mu.len() != scenario.dim() || mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::DimensionMismatch("drift must be a finite d-vector".into()));
    }
    let kappa = scenario.model.precision_times(mu);
    let half_rate = 0.5 * kappa.iter().zip(mu).map(|(k, m)| k * m).sum::<f64>();
    let driver = PathDriver::new(scenario, scenario.n_steps, Some(mu.to_vec()));
    let b = scenario.scaled_barrier();
    let parts = map_chunks(scenario.n_paths, CHUNK_SIZE, |_c, start, len| {
        let mut st = driver.state();
        let mut acc = Moments::default();
        for path in start..start + len {
            driver.begin(path as u64, &mut st);
            let mut value = 0.0;
            if let Some(k) = driver.first_crossing(&mut st, &b) {
                let t = k as f64 * driver.dt;
                // X(τ) = W(τ) - ητ.
                let kw: f64 =
                    kappa.iter().zip(st.x.iter().zip(&st.eta)).map(|(kp, (x, e))| kp * (x + e * t)).sum();
                value = (-kw + half_rate * t).exp();
            }
            acc.push(value);
        }
        acc
    });
    let m = Moments::merged(&parts);
    Ok(EstimateWithCI::from_moments(
        &m,
        scenario.master_seed,
        format!("tilted-paths u={} steps_per_unit={}", scenario.level, scenario.n_steps),
    ))
}

/// Crude sampling for moderate levels, tilted sampling otherwise.
pub fn simulate_ruin_auto(scenario: &RuinScenario) -> Result<EstimateWithCI> {
    if needs_tilting(scenario) {
        simulate_ruin_tilted(scenario)
    } else {
        super::simulate_ruin(scenario)
    }
}
