use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xcity_core::asset::{check_unique_ids, RoadAsset};
use xcity_core::constraints::Tolerances;
use xcity_core::geometry::{Space, DEFAULT_EPS};
use xcity_core::search::phase1::SubsetBudget;
use xcity_core::search::phase2::default_phase2_config;
use xcity_core::search::SearchConfig;
use xcity_core::constraints::DEFAULT_DELTA_TOL;

use crate::error::CliError;

/// Environment variable capping worker threads for parallel restarts.
pub const THREADS_ENV: &str = "XCITY_THREADS";

/// How phase 1 treats the asset list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Most valuable placeable subset.
    #[default]
    Subset,
    /// Place every asset or report the budget as exhausted.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub space: Space,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_delta_tol")]
    pub delta_tol: f64,
    #[serde(default)]
    pub solver: SearchConfig,
    #[serde(default = "default_phase2_config")]
    pub phase2_solver: SearchConfig,
    /// Asset JSON files, relative to the config file.
    pub assets: Vec<PathBuf>,
    #[serde(default)]
    pub selection: Selection,
    #[serde(default = "default_cap")]
    pub subset_cap: usize,
    /// Wall-clock budget for the whole subset selection, in seconds.
    #[serde(default = "default_selection_secs")]
    pub selection_budget_secs: f64,
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

fn default_delta_tol() -> f64 {
    DEFAULT_DELTA_TOL
}

fn default_cap() -> usize {
    SubsetBudget::default().cap
}

fn default_selection_secs() -> f64 {
    SubsetBudget::default().total_secs
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub time_budget: Option<f64>,
    pub threads: Option<usize>,
}

impl Overrides {
    /// Reads the thread cap from [`THREADS_ENV`].
    pub fn with_env_threads(mut self) -> Result<Self, CliError> {
        if let Ok(v) = std::env::var(THREADS_ENV) {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
            self.threads = Some(n);
        }
        Ok(self)
    }
}

/// A config together with its loaded assets.
#[derive(Debug, Clone)]
pub struct Project {
    pub config: ProjectConfig,
    pub assets: Vec<RoadAsset>,
}

impl Project {
    pub fn load(path: &Path, overrides: Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config: ProjectConfig =
            serde_json::from_str(&text).map_err(|e| CliError::schema(path, e))?;
        config.apply(overrides);
        config.validate().map_err(|m| CliError::Schema(format!("{}: {m}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut assets = Vec::with_capacity(config.assets.len());
        for rel in &config.assets {
            let p = base.join(rel);
            let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
            let a: RoadAsset = serde_json::from_str(&text).map_err(|e| CliError::schema(&p, e))?;
            assets.push(a);
        }
        check_unique_ids(&assets).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        Ok(Project { config, assets })
    }
}

impl ProjectConfig {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            eps: self.eps,
            delta_tol: self.delta_tol,
        }
    }

    pub fn subset_budget(&self) -> SubsetBudget {
        SubsetBudget {
            per_subset_secs: self.solver.time_budget_secs,
            total_secs: self.selection_budget_secs,
            cap: self.subset_cap,
        }
    }

    pub fn apply(&mut self, o: Overrides) {
        for s in [&mut self.solver, &mut self.phase2_solver] {
            if let Some(seed) = o.seed {
                s.seed = seed;
            }
            if let Some(t) = o.time_budget {
                s.time_budget_secs = t;
            }
            if o.threads.is_some() {
                s.threads = o.threads;
            }
        }
        if let Some(t) = o.time_budget {
            self.selection_budget_secs = t;
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err("eps must be > 0".into());
        }
        if !(self.delta_tol > 0.0 && self.delta_tol.is_finite()) {
            return Err("delta_tol must be > 0".into());
        }
        if self.selection_budget_secs.is_nan() || self.selection_budget_secs <= 0.0 {
            return Err("selection_budget_secs must be > 0".into());
        }
        self.solver.validate().map_err(|e| e.to_string())?;
        self.phase2_solver.validate().map_err(|e| format!("phase2 {e}"))?;
        Ok(())
    }
}
