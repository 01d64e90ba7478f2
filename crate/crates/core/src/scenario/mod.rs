//! Side-by-side HPA/PBA scenarios: configuration, the runner and the
//! comparison report.

mod config;
mod report;
mod run;

pub use config::{ScenarioConfig, ScenarioSection};
pub use report::{
    compare, compare_records, mape, read_report_csv, summarize, ComparisonReport, RunSummary,
};
pub use run::{
    emit_plot_data, forecast_eval, load_trace, run_scenario, EvalForecast, ScenarioOutcome,
    PLOT_FILES,
};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("invalid config field {field}: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}
