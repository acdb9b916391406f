use crate::error::{Error, Result};
use crate::gaussian::{log_phi, univariate_phi};

/// Finite-horizon ruin probability of `u + c t - σ B(t)` on `[0, T]`:
///
/// `Φ(-u/(σ√T) - c√T/σ) + exp(-2cu/σ²) Φ(-u/(σ√T) + c√T/σ)`.
///
/// The second term is formed in log space so a large `exp(-2cu/σ²)` (for
/// negative `c`) does not overflow against a tiny `Φ`.
pub fn exact_ruin_1d(u: f64, c: f64, sigma: f64, horizon: f64) -> Result<f64> {
    if !(u >= 0.0 && u.is_finite()) {
        return Err(Error::DomainError(format!("capital u = {u} must be finite and >= 0")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::DomainError(format!("sigma = {sigma} must be positive")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::DomainError(format!("horizon T = {horizon} must be positive")));
    }
    if !c.is_finite() {
        return Err(Error::DomainError("premium rate must be finite".into()));
    }
    let st = sigma * horizon.sqrt();
    let drift = c * horizon.sqrt() / sigma;
    let first = univariate_phi(-u / st - drift);
    let second = (-2.0 * c * u / (sigma * sigma) + log_phi(-u / st + drift)).exp();
    Ok((first + second).min(1.0))
}
