//! Simultaneous ruin asymptotics for `d`-dimensional Brownian risk models
//! `W(t) - η t`, `W = A B`, with a bounded random trend `η`.

// Comparisons like `!(x > 0.0)` reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod estimate;
pub mod gaussian;
mod paths;
pub mod qp;
pub mod rng;
pub mod simulator;
pub mod trend;

pub use error::{Error, Result};
pub use estimate::EstimateWithCI;
