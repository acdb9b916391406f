use crate::error::{Error, Result};
use crate::gaussian::CovarianceModel;
use crate::trend::TrendDistribution;

pub const MIN_STEPS: usize = 64;
pub const MIN_PATHS: usize = 100;

/// Everything needed to estimate `ψ_T(au) = P(∃t ≤ T: W(t) - ηt > au)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RuinScenario {
    pub model: CovarianceModel,
    /// Barrier direction `a`.
    pub barrier: Vec<f64>,
    pub trend: TrendDistribution,
    /// Horizon `T`.
    pub horizon: f64,
    /// Level `u`.
    pub level: f64,
    /// Grid points per unit of time.
    pub n_steps: usize,
    pub n_paths: usize,
    pub master_seed: u64,
}

impl RuinScenario {
    /// A scenario with zero trend, `T = 1` and small default budgets.
    pub fn new(model: CovarianceModel, barrier: Vec<f64>, level: f64) -> Self {
        let d = model.dim();
        Self {
            model,
            barrier,
            trend: TrendDistribution::zero(d),
            horizon: 1.0,
            level,
            n_steps: 1024,
            n_paths: 10_000,
            master_seed: 0,
        }
    }

    pub fn with_trend(mut self, trend: TrendDistribution) -> Self {
        self.trend = trend;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    pub fn with_budget(mut self, n_steps: usize, n_paths: usize) -> Self {
        self.n_steps = n_steps;
        self.n_paths = n_paths;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.barrier.len() != d {
            return Err(Error::InvalidScenario(format!(
                "barrier has length {}, model dimension {d}",
                self.barrier.len()
            )));
        }
        if self.barrier.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScenario("barrier entries must be finite".into()));
        }
        if self.barrier.iter().all(|&v| v <= 0.0) {
            return Err(Error::InvalidScenario(
                "barrier needs at least one strictly positive component".into(),
            ));
        }
        if !(self.level > 0.0 && self.level.is_finite()) {
            return Err(Error::InvalidScenario(format!("level u = {} must be positive", self.level)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidScenario(format!("horizon T = {} must be positive", self.horizon)));
        }
        if self.n_steps < MIN_STEPS {
            return Err(Error::InvalidScenario(format!("n_steps = {} below {MIN_STEPS}", self.n_steps)));
        }
        if self.n_paths < MIN_PATHS {
            return Err(Error::InvalidScenario(format!("n_paths = {} below {MIN_PATHS}", self.n_paths)));
        }
        self.trend.validate(d).map_err(|e| Error::InvalidScenario(e.to_string()))
    }

    /// Number of grid steps on `[0, T]`.
    pub fn total_steps(&self) -> usize {
        ((self.n_steps as f64) * self.horizon).round().max(1.0) as usize
    }

    /// `a · u`.
    pub fn scaled_barrier(&self) -> Vec<f64> {
        self.barrier.iter().map(|a| a * self.level).collect()
    }
}
