//! Scenario files: strict JSON, schema version 1.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::gaussian::CovarianceModel;
use crate::qp::EquicorrSpec;
use crate::simulator::RuinScenario;
use crate::trend::TrendDistribution;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Row-major mixing matrix `A`, `Σ = A Aᵀ`.
    Mixing(Vec<Vec<f64>>),
    /// Unit variances with common correlation `rho`.
    Equicorr { dim: usize, rho: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    /// Grid points per unit time, for ruin paths and for `I_a` paths.
    pub n_steps: usize,
    pub n_paths: usize,
    pub tail_budget: usize,
    pub ia_paths: usize,
    /// Horizon `Λ` for `I_a(Λ)`.
    pub ia_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub barrier: Vec<f64>,
    pub trend: TrendDistribution,
    pub horizon: f64,
    pub levels: Vec<f64>,
    pub budgets: Budgets,
    pub master_seed: u64,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| CliError::Parse(format!("scenario: {e}")))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(CliError::Parse(format!(
                "schema_version: expected {SCHEMA_VERSION}, found {}",
                file.schema_version
            )));
        }
        Ok(file)
    }

    /// SHA-256 of the canonical serialization: key order and whitespace in
    /// the source file do not matter.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("scenario serializes");
        format!("{:x}", Sha256::digest(&canonical))
    }

    pub fn model(&self) -> Result<CovarianceModel, CliError> {
        let d = self.barrier.len();
        match &self.model {
            ModelSpec::Mixing(rows) => {
                if rows.iter().any(|r| r.len() != rows.len()) {
                    return Err(CliError::Domain("model.mixing: matrix must be square".into()));
                }
                let n = rows.len();
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                CovarianceModel::from_mixing(DMatrix::from_row_slice(n, n, &flat))
                    .map_err(|e| CliError::Domain(format!("model.mixing: {e}")))
            }
            ModelSpec::Equicorr { dim, rho } => EquicorrSpec::new(*dim, *rho, vec![1.0; (*dim).max(d)])
                .and_then(|s| s.model())
                .map_err(|e| CliError::Domain(format!("model.equicorr: {e}"))),
        }
    }

    /// Checks everything that does not need the model.
    pub fn validate(&self) -> Result<(), CliError> {
        let finite = |v: f64| v.is_finite();
        if !self.barrier.iter().copied().all(finite) {
            return Err(CliError::Domain("barrier: entries must be finite".into()));
        }
        if self.barrier.iter().all(|&a| a <= 0.0) {
            return Err(CliError::Domain("barrier: needs at least one strictly positive component".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(CliError::Domain(format!("horizon: {} must be positive", self.horizon)));
        }
        if self.levels.is_empty() {
            return Err(CliError::Config("levels: at least one level is required".into()));
        }
        if self.levels.iter().any(|u| !(*u > 0.0 && u.is_finite())) {
            return Err(CliError::Config("levels: every level must be positive".into()));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("levels: must be strictly increasing".into()));
        }
        let b = &self.budgets;
        if !(b.ia_lambda > 0.0 && b.ia_lambda.is_finite()) {
            return Err(CliError::Config("budgets.ia_lambda: must be positive".into()));
        }
        if b.n_steps < crate::simulator::MIN_STEPS {
            return Err(CliError::Config(format!(
                "budgets.n_steps: {} below {}",
                b.n_steps,
                crate::simulator::MIN_STEPS
            )));
        }
        if b.n_paths < crate::simulator::MIN_PATHS {
            return Err(CliError::Config(format!(
                "budgets.n_paths: {} below {}",
                b.n_paths,
                crate::simulator::MIN_PATHS
            )));
        }
        self.trend.validate(self.barrier.len()).map_err(|e| CliError::Domain(format!("trend: {e}")))?;
        Ok(())
    }

    /// The scenario at level `u`.
    pub fn scenario(&self, model: &CovarianceModel, u: f64) -> RuinScenario {
        RuinScenario {
            model: model.clone(),
            barrier: self.barrier.clone(),
            trend: self.trend.clone(),
            horizon: self.horizon,
            level: u,
            n_steps: self.budgets.n_steps,
            n_paths: self.budgets.n_paths,
            master_seed: self.master_seed,
        }
    }
}
