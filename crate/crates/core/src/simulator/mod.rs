//! Direct Monte Carlo estimation of the simultaneous ruin probability
//! `ψ_T(au) = P(∃t ∈ [0,T]: W(t) - ηt > au)` on a uniform time grid.
//!
//! Every estimator derives path `i` from stream `i` of a per-seed family, so
//! estimators run on the same scenario see the same paths.

mod crude;
mod driver;
mod scenario;
mod tilted;

pub use crate::trend::sample_trend;
pub use crude::{convergence_sweep, level_sweep, simulate_ruin, simulate_split, SplitEstimate, SweepRow};
pub use scenario::{RuinScenario, MIN_PATHS, MIN_STEPS};
pub use tilted::{
    needs_tilting, simulate_ruin_auto, simulate_ruin_tilted, simulate_ruin_with_drift, tilt_drift,
};
