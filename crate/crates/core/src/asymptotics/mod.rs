//! Closed and semi-closed forms around the simultaneous ruin asymptotics:
//! the exact one-dimensional ruin probability, the constant `I_a`, the
//! assembled approximation of `ψ₁(au)`, the Gaussian tail expansion and the
//! trend-specific factors.

mod bounds;
mod exact;
mod expansion;
pub mod frontier;
pub mod ia;
mod psi;

pub use bounds::{
    bernoulli_asymptotic_factor, uniform_trend_asymptotic, upper_bound_constant, BoundConstant,
    MIN_BOUND_PROBABILITY,
};
pub use exact::exact_ruin_1d;
pub use expansion::{uniform_tail_expansion, uniform_tail_expansion_with, DEFAULT_EXPANSION_BUDGET};
pub use frontier::{frontier_exp_integral, PathFrontier};
pub use ia::{
    estimate_ia, estimate_ia_extended, estimate_ia_horizons, estimate_ia_quadrature, IaConfig, IaExtension,
    QuadratureConfig, QuadratureResult,
};
pub use psi::{
    assemble, asymptotic_psi, asymptotic_psi_with_ia, ia_for, tail_term, to_unit_horizon, AsymptoticConfig,
    AsymptoticResult, UnitHorizon, DEFAULT_TREND_DRAWS,
};
