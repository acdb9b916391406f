//! On-disk cache of `I_a` estimates, one JSON file per scenario hash.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scenario::ScenarioFile;
use super::CliError;
use crate::estimate::EstimateWithCI;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
const SUFFIX: &str = "-ia.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaKey {
    pub n_steps: usize,
    pub ia_paths: usize,
    pub ia_lambda: f64,
}

impl IaKey {
    pub fn of(file: &ScenarioFile) -> Self {
        Self {
            n_steps: file.budgets.n_steps,
            ia_paths: file.budgets.ia_paths,
            ia_lambda: file.budgets.ia_lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub tool_version: String,
    pub scenario_hash: String,
    pub budgets: IaKey,
    pub estimate: EstimateWithCI,
    pub lambda_horizon: f64,
}

/// `BRISK_CACHE_DIR`, else the platform cache directory plus `brisk`.
pub fn cache_dir() -> PathBuf {
    match std::env::var_os("BRISK_CACHE_DIR") {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => dirs::cache_dir().unwrap_or_else(std::env::temp_dir).join("brisk"),
    }
}

pub struct IaCache {
    dir: PathBuf,
}

/// Outcome of a lookup. Unusable entries carry the reason.
pub enum Lookup {
    Hit(CacheEntry),
    Miss,
    Unusable(String),
}

impl IaCache {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}{SUFFIX}"))
    }

    pub fn get(&self, hash: &str, key: &IaKey) -> Lookup {
        let path = self.path_for(hash);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Lookup::Miss,
            Err(e) => return Lookup::Unusable(format!("{}: {e}", path.display())),
        };
        let entry: CacheEntry = match serde_json::from_str(&text) {
            Ok(e) => e,
            Err(e) => return Lookup::Unusable(format!("{} is corrupt: {e}", path.display())),
        };
        if entry.tool_version != TOOL_VERSION || &entry.budgets != key || entry.scenario_hash != hash {
            return Lookup::Unusable(format!("{} is stale", path.display()));
        }
        Lookup::Hit(entry)
    }

    /// Writes through a temporary file in the cache directory and renames it
    /// into place.
    pub fn put(&self, entry: &CacheEntry) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::Io(format!("cache {}: {e}", self.dir.display()));
        std::fs::create_dir_all(&self.dir).map_err(io)?;
        let body = serde_json::to_string_pretty(entry).expect("cache entry serializes");
        atomic_write(&self.path_for(&entry.scenario_hash), body.as_bytes())
    }

    pub fn entries(&self) -> Result<Vec<PathBuf>, CliError> {
        let rd = match std::fs::read_dir(&self.dir) {
            Ok(rd) => rd,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(CliError::Io(format!("{}: {e}", self.dir.display()))),
        };
        let mut out = Vec::new();
        for item in rd {
            let item = item.map_err(|e| CliError::Io(e.to_string()))?;
            let p = item.path();
            if p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(SUFFIX)) {
                out.push(p);
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn clear(&self) -> Result<usize, CliError> {
        let entries = self.entries()?;
        for p in &entries {
            std::fs::remove_file(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        }
        Ok(entries.len())
    }
}

/// Temp file in the target directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
