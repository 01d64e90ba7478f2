//! Seasonal ARIMA modelling of request-rate series.
//!
//! The pipeline is the classic Box-Jenkins loop: difference the series until
//! it looks stationary, read candidate orders off the sample ACF/PACF,
//! estimate coefficients by conditional sum of squares and iterate the fitted
//! recursion forward to forecast.

mod correlation;
mod difference;
mod model;
mod order;
mod series;
mod simplex;

pub use correlation::{acf, autocovariance, durbin_levinson, pacf};
pub use difference::{difference, undifference};
pub use model::{aic, fit, forecast, FitWarning, ForecastResult, SarimaFit};
pub use order::{suggest_order, SarimaOrder};
pub use series::TimeSeries;
pub use simplex::{minimize, Minimum, SimplexOptions};

/// Errors raised by the forecasting routines.
#[derive(Debug, thiserror::Error)]
pub enum ForecastError {
    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("series has zero variance")]
    DegenerateVariance,

    #[error("Durbin-Levinson recursion became singular at lag {lag}")]
    Singular { lag: usize },

    #[error("optimizer did not converge after {evaluations} objective evaluations")]
    NoConvergence {
        evaluations: usize,
        best: Box<SarimaFit>,
    },

    #[error("malformed fit record: {0}")]
    Parse(String),
}
