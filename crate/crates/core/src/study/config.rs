//! Experiment configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    Schema(u32),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// How the discrete factor of the continuous rates is averaged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingMode {
    /// Against the complex-balanced equilibrium of the discrete system,
    /// giving product-form Poisson marginals.
    #[default]
    ComplexBalanced,
    /// Against the numerically computed stationary distribution.
    Stationary,
}

/// What the fixed-time marginal is expected to look like at large `N`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Close to the reference law.
    #[default]
    MatchesReference,
    /// Close to the reference law and away from every Poisson law.
    NonPoisson,
}

/// A function of the discrete state evaluated along paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Observable {
    /// `g(x) = x_S`.
    Mean { species: String },
    /// `g(x) = 1` if `x_S` is in `values`.
    Indicator { species: String, values: Vec<u64> },
    /// `g(x) = min(x_S, cap)^order`.
    TruncatedMoment { species: String, order: u32, cap: u64 },
}

impl Observable {
    pub fn species(&self) -> &str {
        match self {
            Observable::Mean { species }
            | Observable::Indicator { species, .. }
            | Observable::TruncatedMoment { species, .. } => species,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Observable::Mean { species } => format!("mean({species})"),
            Observable::Indicator { species, values } => format!("indicator({species} in {values:?})"),
            Observable::TruncatedMoment { species, order, cap } => format!("min({species},{cap})^{order}"),
        }
    }

    pub fn eval(&self, x: u64) -> f64 {
        match self {
            Observable::Mean { .. } => x as f64,
            Observable::Indicator { values, .. } => f64::from(u8::from(values.contains(&x))),
            Observable::TruncatedMoment { order, cap, .. } => (x.min(*cap) as f64).powi(*order as i32),
        }
    }
}

/// Pass thresholds, fixed before the runs they judge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Largest total variation to the reference at the largest `N`.
    pub total_variation: f64,
    /// Largest median path distance at the largest `N`.
    #[serde(default)]
    pub sup_distance: Option<f64>,
    /// Largest median time-average residual at the largest `N`.
    #[serde(default)]
    pub residual: Option<f64>,
    /// Largest relative error of the marginal mean at the largest `N`.
    #[serde(default)]
    pub mean_error: Option<f64>,
    /// Smallest total variation to the best-fit Poisson law, for
    /// [`Expectation::NonPoisson`].
    #[serde(default)]
    pub min_best_fit_total_variation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    /// Network file, relative to the config file.
    pub network: PathBuf,
    /// 0 for discrete, 1 for continuous; must name every species.
    pub alpha: BTreeMap<String, u8>,
    /// Initial point: counts for discrete species, concentrations for
    /// continuous ones.
    pub x0: BTreeMap<String, f64>,
    pub n_grid: Vec<u64>,
    pub t_end: f64,
    /// Marginals are compared at `burn_in` and later; defaults to `t_end / 10`.
    #[serde(default)]
    pub burn_in: Option<f64>,
    /// Times of the fixed-time marginals; defaults to `[t_end]`.
    #[serde(default)]
    pub marginal_times: Option<Vec<f64>>,
    /// Replicas per `N`.
    pub replicas: u64,
    /// Replicas per `N` that also track path distance and residuals.
    #[serde(default = "default_path_replicas")]
    pub path_replicas: u64,
    pub seed: u64,
    #[serde(default)]
    pub averaging: AveragingMode,
    /// Species of the fixed-time marginal; defaults to the discrete ones.
    #[serde(default)]
    pub marginal_species: Option<Vec<String>>,
    #[serde(default)]
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub expectation: Expectation,
    pub thresholds: Thresholds,
    /// Free text copied into the summary.
    #[serde(default)]
    pub notes: Vec<String>,
}

fn default_path_replicas() -> u64 {
    200
}

impl ExperimentConfig {
    /// Reads and validates a config; relative network paths are resolved
    /// against the config's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|source| ConfigError::Json { path: path.into(), source })?;
        if cfg.network.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.network = dir.join(&cfg.network);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn burn_in(&self) -> f64 {
        self.burn_in.unwrap_or(self.t_end / 10.0)
    }

    pub fn marginal_times(&self) -> Vec<f64> {
        self.marginal_times.clone().unwrap_or_else(|| vec![self.t_end])
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(self.schema_version));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        let delta = self.burn_in();
        if !(delta >= 0.0 && delta < self.t_end) {
            return bad(format!("burn_in must satisfy 0 <= burn_in < t_end, got {delta} with t_end {}", self.t_end));
        }
        for &t in &self.marginal_times() {
            if !(t >= delta && t <= self.t_end) {
                return bad(format!("marginal time {t} outside [burn_in, t_end] = [{delta}, {}]", self.t_end));
            }
        }
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if self.path_replicas > self.replicas {
            return bad(format!("path_replicas {} exceeds replicas {}", self.path_replicas, self.replicas));
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return bad("n_grid must be non-empty with entries at least 1".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_grid must be strictly increasing".into());
        }
        if let Some((s, a)) = self.alpha.iter().find(|(_, &a)| a > 1) {
            return bad(format!("alpha for {s} must be 0 or 1, got {a}"));
        }
        Ok(())
    }
}
