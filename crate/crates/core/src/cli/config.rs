use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::SimParams;
use crate::scenario::InitSpec;

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_cadence() -> usize {
    1
}

fn default_time_series() -> String {
    "timeseries.csv".into()
}

fn default_summary() -> String {
    "summary.txt".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default = "default_time_series")]
    pub time_series: String,
    #[serde(default = "default_summary")]
    pub summary: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            time_series: default_time_series(),
            summary: default_summary(),
        }
    }
}

/// Parameter grid for `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub omega: Vec<f64>,
    pub mu_s: Vec<f64>,
}

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Spectral truncation degree `L`.
    pub degree: usize,
    pub mu_s: f64,
    pub omega: f64,
    #[serde(default = "one")]
    pub radius: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "yes")]
    pub dealias: bool,
    /// Diagnostics every `cadence` steps.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    pub init: InitSpec,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn params(&self) -> SimParams {
        SimParams {
            mu_s: self.mu_s,
            omega: self.omega,
            radius: self.radius,
            dt: self.dt,
            t_end: self.t_end,
            dealias: self.dealias,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.degree < 2 {
            return Err(format!("degree must be >= 2, got {}", self.degree));
        }
        if self.cadence == 0 {
            return Err("cadence must be >= 1".into());
        }
        self.params().validate().map_err(|e| e.to_string())?;
        if let Some(grid) = &self.sweep {
            if grid.omega.is_empty() || grid.mu_s.is_empty() {
                return Err("sweep grid needs at least one omega and one mu_s".into());
            }
        }
        Ok(())
    }
}
