use super::series::is_degenerate;
use super::{ForecastError, TimeSeries};

/// Biased sample autocovariance at lags `0..=max_lag` (each sum divided by n).
pub fn autocovariance(values: &[f64], max_lag: usize) -> Vec<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    (0..=max_lag.min(n.saturating_sub(1)))
        .map(|k| {
            centered[..n - k]
                .iter()
                .zip(&centered[k..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n as f64
        })
        .collect()
}

/// Sample autocorrelation at lags `0..=max_lag`.
pub fn acf(series: &TimeSeries, max_lag: usize) -> Result<Vec<f64>, ForecastError> {
    acf_values(series.values(), max_lag)
}

pub(crate) fn acf_values(values: &[f64], max_lag: usize) -> Result<Vec<f64>, ForecastError> {
    if max_lag >= values.len() {
        return Err(ForecastError::TooShort {
            needed: max_lag + 1,
            got: values.len(),
        });
    }
    if is_degenerate(values) {
        return Err(ForecastError::DegenerateVariance);
    }
    let gamma = autocovariance(values, max_lag);
    let g0 = gamma[0];
    Ok(gamma
        .iter()
        .enumerate()
        .map(|(k, g)| {
            if k == 0 {
                1.0
            } else {
                (g / g0).clamp(-1.0, 1.0)
            }
        })
        .collect())
}

/// Partial autocorrelation at lags `1..=max_lag`.
pub fn pacf(series: &TimeSeries, max_lag: usize) -> Result<Vec<f64>, ForecastError> {
    pacf_values(series.values(), max_lag)
}

pub(crate) fn pacf_values(values: &[f64], max_lag: usize) -> Result<Vec<f64>, ForecastError> {
    let r = acf_values(values, max_lag)?;
    Ok(durbin_levinson(&r, max_lag)?.partials)
}

/// Output of the Durbin-Levinson recursion.
#[derive(Debug, Clone)]
pub struct Levinson {
    /// AR coefficients of the order-`k` best linear predictor.
    pub coefficients: Vec<f64>,
    /// Partial autocorrelations at lags `1..=k`.
    pub partials: Vec<f64>,
    /// One-step prediction error variance in units of `gamma[0]`.
    pub error_variance: f64,
}

/// Solves the Yule-Walker equations of increasing order from an
/// autocovariance (or autocorrelation) sequence `gamma[0..=order]`.
pub fn durbin_levinson(gamma: &[f64], order: usize) -> Result<Levinson, ForecastError> {
    if gamma.len() <= order {
        return Err(ForecastError::TooShort {
            needed: order + 1,
            got: gamma.len(),
        });
    }
    let mut phi: Vec<f64> = Vec::with_capacity(order);
    let mut partials = Vec::with_capacity(order);
    let mut v = gamma[0];
    for k in 1..=order {
        if v <= 0.0 || !v.is_finite() {
            return Err(ForecastError::Singular { lag: k });
        }
        let num = gamma[k]
            - phi
                .iter()
                .enumerate()
                .map(|(j, p)| p * gamma[k - 1 - j])
                .sum::<f64>();
        let mut kappa = num / v;
        if kappa.abs() > 1.0 + 1e-9 || !kappa.is_finite() {
            return Err(ForecastError::Singular { lag: k });
        }
        kappa = kappa.clamp(-1.0, 1.0);
        let prev = phi.clone();
        for j in 0..phi.len() {
            phi[j] = prev[j] - kappa * prev[k - 2 - j];
        }
        phi.push(kappa);
        partials.push(kappa);
        v *= 1.0 - kappa * kappa;
    }
    Ok(Levinson {
        coefficients: phi,
        partials,
        error_variance: v / gamma[0],
    })
}
