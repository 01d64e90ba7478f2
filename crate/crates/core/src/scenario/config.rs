use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ConfigError;
use crate::autoscale::{HpaConfig, PbaConfig};
use crate::cluster::FunctionSpec;
use crate::workload::{ArrivalMode, WorkloadSpec, SECONDS_PER_HOUR};

/// Everything one comparison run needs. Every key has a default, so an
/// empty file describes the reference scenario.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub workload: WorkloadSpec,
    pub function: FunctionSpec,
    pub hpa: HpaConfig,
    pub pba: PbaConfig,
    pub scenario: ScenarioSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    /// Replays an `hour,rate` CSV instead of generating a trace.
    pub trace_file: Option<PathBuf>,
    pub arrivals: ArrivalMode,
    /// Seconds per simulation tick.
    pub tick_length: u32,
    pub train_days: usize,
    pub eval_days: usize,
    /// Seasonal period of the forecaster, hours.
    pub period: usize,
    pub output_dir: PathBuf,
    /// Overrides `workload.seed`; also seeds Poisson arrivals.
    pub seed: Option<u64>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            trace_file: None,
            arrivals: ArrivalMode::Deterministic,
            tick_length: 1,
            train_days: 9,
            eval_days: 1,
            period: 24,
            output_dir: PathBuf::from("out"),
            seed: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file. Relative `trace_file` paths resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> crate::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        let mut config = Self::from_toml_str(&text)?;
        if let (Some(trace), Some(dir)) = (&config.scenario.trace_file, path.parent()) {
            if trace.is_relative() {
                config.scenario.trace_file = Some(dir.join(trace));
            }
        }
        Ok(config)
    }

    pub fn seed(&self) -> u64 {
        self.scenario.seed.unwrap_or(self.workload.seed)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.scenario.trace_file.is_none() {
            self.workload
                .validate()
                .map_err(|e| ConfigError::invalid("workload", e.to_string()))?;
        }
        self.function
            .validate()
            .map_err(|m| ConfigError::invalid("function", m))?;
        self.hpa
            .validate()
            .map_err(|m| ConfigError::invalid("hpa", m))?;
        self.pba
            .validate()
            .map_err(|m| ConfigError::invalid("pba", m))?;

        let s = &self.scenario;
        if s.tick_length == 0 || !SECONDS_PER_HOUR.is_multiple_of(s.tick_length) {
            return Err(ConfigError::invalid(
                "scenario.tick_length",
                format!("must divide 3600, got {}", s.tick_length),
            ));
        }
        if s.train_days < 2 {
            return Err(ConfigError::invalid(
                "scenario.train_days",
                format!("must be at least 2, got {}", s.train_days),
            ));
        }
        if s.eval_days < 1 {
            return Err(ConfigError::invalid(
                "scenario.eval_days",
                "must be at least 1",
            ));
        }
        if s.period == 0 {
            return Err(ConfigError::invalid("scenario.period", "must be positive"));
        }
        if s.trace_file.is_none() && s.train_days + s.eval_days > self.workload.days {
            return Err(ConfigError::invalid(
                "scenario.eval_days",
                format!(
                    "train_days + eval_days = {} exceeds workload.days = {}",
                    s.train_days + s.eval_days,
                    self.workload.days
                ),
            ));
        }
        Ok(())
    }
}
