//! Standard normal distribution function and its complement.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal density.
pub fn univariate_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Φ(x)`.
pub fn univariate_phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `1 - Φ(x)`, evaluated without cancellation.
pub fn univariate_phibar(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `ln(1 - Φ(x))`, finite for every finite `x`.
pub fn log_phibar(x: f64) -> f64 {
    if x < 35.0 {
        univariate_phibar(x).ln()
    } else {
        // Mills-ratio series; the first omitted term is below 1e-12 here.
        let r = 1.0 / (x * x);
        let series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
        -0.5 * x * x - LN_SQRT_2PI - x.ln() + series.ln()
    }
}

/// `ln Φ(x)`.
pub fn log_phi(x: f64) -> f64 {
    log_phibar(-x)
}
