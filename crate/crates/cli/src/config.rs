use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mapgroups::atlas::Atlas;
use mapgroups::lie::MatrixGroup;
use mapgroups::sobolev::WeightConvention;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Experiment parameters; every field has a default, file values are
/// overridden by command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Mode cutoff `N`.
    pub modes: usize,
    /// Grid nodes per axis are `grid_factor·N + 1`.
    pub grid_factor: usize,
    /// Overrides of check tolerances, keyed by check id.
    pub tolerances: BTreeMap<String, f64>,
    pub atlas: String,
    pub group: String,
    pub convention: WeightConvention,
    /// Not echoed in reports, so runs into different directories compare equal.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    /// Random instances per probe suite.
    pub samples: usize,
    /// RK4 steps for `evolve` and `shrink-domain`.
    pub steps: usize,
    /// Limit exponent and rung count for `ladder`.
    pub s0: f64,
    pub rungs: usize,
    pub alphas: Vec<f64>,
    /// Flow time for `shrink-domain`.
    pub t0: f64,
    /// Smoothness orders reported by `norms`, and used by `extend`.
    pub orders: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            modes: 32,
            grid_factor: 4,
            tolerances: BTreeMap::new(),
            atlas: "circle2".into(),
            group: "SO3".into(),
            convention: WeightConvention::PaperHalf,
            out: PathBuf::from("out"),
            samples: 20,
            steps: 64,
            s0: 0.5,
            rungs: 4,
            alphas: vec![1.0, 1.5, 2.0],
            t0: 0.1,
            orders: vec![0.0, 0.5, 1.0, 1.5, 2.0],
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    /// Nodes per axis of every chart grid.
    pub fn resolution(&self) -> usize {
        self.grid_factor * self.modes + 1
    }

    /// Rejects malformed values. A zero tolerance is accepted: it makes the
    /// named check fail instead of the run.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.modes == 0 {
            return Err(CliError::Config("modes must be positive".into()));
        }
        if self.grid_factor < 2 {
            return Err(CliError::Config(format!(
                "grid_factor {} leaves fewer than 2N+1 nodes per axis",
                self.grid_factor
            )));
        }
        for (k, v) in &self.tolerances {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(CliError::Config(format!("tolerance {k} = {v} is not a non-negative number")));
            }
        }
        if self.samples == 0 || self.steps < 16 || self.rungs < 2 {
            return Err(CliError::Config("samples must be positive, steps at least 16, rungs at least 2".into()));
        }
        if self.orders.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(CliError::Config("orders must be finite and non-negative".into()));
        }
        self.atlas()?;
        self.group()?;
        Ok(())
    }

    pub fn atlas(&self) -> Result<Atlas, CliError> {
        Atlas::builtin(&self.atlas, self.resolution()).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn group(&self) -> Result<MatrixGroup, CliError> {
        MatrixGroup::parse(&self.group).map_err(|e| CliError::Config(e.to_string()))
    }

    /// The configured tolerance for `id`, or `default`. Unknown ids are
    /// caught by [`RunConfig::check_tolerance_keys`].
    pub fn tol(&self, id: &str, default: f64) -> f64 {
        self.tolerances.get(id).copied().unwrap_or(default)
    }

    pub fn check_tolerance_keys(&self, known: &[&str]) -> Result<(), CliError> {
        for k in self.tolerances.keys() {
            if !known.contains(&k.as_str()) {
                return Err(CliError::Config(format!("unknown tolerance key {k:?} (known: {})", known.join(", "))));
            }
        }
        Ok(())
    }
}
