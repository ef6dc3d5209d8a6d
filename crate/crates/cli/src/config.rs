use std::fs;
use std::path::{Path, PathBuf};

use ruin_core::engine::DEFAULT_HORIZON;
use ruin_core::joint::DEFAULT_TRUNC_EPS;
use ruin_core::precision::DEFAULT_PRECISION_BITS;
use ruin_core::{DependenceSpec, EngineOptions, Precision};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A `compute` / `oracle` run, read from JSON.
///
/// ```json
/// {"model": {"kind": "bivariate_poisson", "lambda1": 0.3, "lambda2": 1.4, "lambda": 0.15},
///  "u_max": 12, "n": 20, "output": {"path": "psi.csv", "format": "csv+svg"}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: DependenceSpec,
    #[serde(default = "default_u_max")]
    pub u_max: usize,
    /// Horizon N of the φ(0) ratio estimator.
    #[serde(default = "default_horizon", alias = "N")]
    pub n: usize,
    #[serde(default = "default_precision_bits")]
    pub precision_bits: u32,
    #[serde(default = "default_trunc_eps")]
    pub trunc_eps: f64,
    #[serde(default)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "default_output_path")]
    pub path: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

impl Default for Output {
    fn default() -> Self {
        Output {
            path: default_output_path(),
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    #[default]
    #[serde(rename = "csv")]
    Csv,
    #[serde(rename = "csv+svg")]
    CsvSvg,
}

fn default_u_max() -> usize {
    12
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

fn default_precision_bits() -> u32 {
    DEFAULT_PRECISION_BITS
}

fn default_trunc_eps() -> f64 {
    DEFAULT_TRUNC_EPS
}

fn default_output_path() -> PathBuf {
    PathBuf::from("psi.csv")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate().map_err(|message| CliError::Config {
            path: path.to_path_buf(),
            message,
        })?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n < 2 {
            return Err(format!("n must be at least 2, got {}", self.n));
        }
        Precision::new(self.precision_bits).map_err(|e| e.to_string())?;
        if !(self.trunc_eps > 0.0 && self.trunc_eps < 1.0) {
            return Err(format!(
                "trunc_eps must lie in (0, 1), got {}",
                self.trunc_eps
            ));
        }
        self.model.validate().map_err(|e| e.to_string())
    }

    pub fn engine_options(&self) -> EngineOptions {
        EngineOptions {
            horizon: self.n,
            precision: Precision::new(self.precision_bits).expect("validated on load"),
            trunc_eps: self.trunc_eps,
            ..EngineOptions::default()
        }
    }
}
