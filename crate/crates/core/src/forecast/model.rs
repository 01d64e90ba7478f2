use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use super::correlation::{autocovariance, durbin_levinson};
use super::difference::DifferenceChain;
use super::series::{is_degenerate, mean};
use super::simplex::{minimize, SimplexOptions};
use super::{ForecastError, SarimaOrder, TimeSeries};

/// Diagnostics attached to a fit; none of them stops estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitWarning {
    /// Non-seasonal AR polynomial has a root on or inside the unit circle.
    NonStationary,
    NonStationarySeasonal,
    /// Non-seasonal MA polynomial has a root on or inside the unit circle.
    NonInvertible,
    NonInvertibleSeasonal,
}

impl FitWarning {
    fn as_str(self) -> &'static str {
        match self {
            FitWarning::NonStationary => "non_stationary",
            FitWarning::NonStationarySeasonal => "non_stationary_seasonal",
            FitWarning::NonInvertible => "non_invertible",
            FitWarning::NonInvertibleSeasonal => "non_invertible_seasonal",
        }
    }
}

impl FromStr for FitWarning {
    type Err = ForecastError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "non_stationary" => FitWarning::NonStationary,
            "non_stationary_seasonal" => FitWarning::NonStationarySeasonal,
            "non_invertible" => FitWarning::NonInvertible,
            "non_invertible_seasonal" => FitWarning::NonInvertibleSeasonal,
            other => return Err(ForecastError::Parse(format!("unknown warning `{other}`"))),
        })
    }
}

/// Estimated multiplicative seasonal ARIMA model.
///
/// On the differenced scale `w_t` with `z_t = w_t - intercept` the model is
/// `(1 - Σφ_i B^i)(1 - ΣΦ_j B^{jm}) z_t = (1 + Σθ_i B^i)(1 + ΣΘ_j B^{jm}) e_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SarimaFit {
    pub order: SarimaOrder,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub seasonal_ar: Vec<f64>,
    pub seasonal_ma: Vec<f64>,
    /// Mean of the differenced series; zero whenever any differencing is applied.
    pub intercept: f64,
    pub sigma2: f64,
    /// Number of residuals entering the conditional sum of squares.
    pub n_obs: usize,
    pub css: f64,
    pub warnings: Vec<FitWarning>,
}

/// Point forecasts for steps `t+1..=t+horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    pub point: Vec<f64>,
    pub horizon: usize,
}

/// Sparse lag polynomial: `(lag, coefficient)` pairs with lag ≥ 1.
type LagPoly = Vec<(usize, f64)>;

fn expand(nonseasonal: &[f64], seasonal: &[f64], period: usize, sign: f64) -> LagPoly {
    let span = nonseasonal.len() + seasonal.len() * period;
    let mut dense = vec![0.0; span + 1];
    for (i, c) in nonseasonal.iter().enumerate() {
        dense[i + 1] += c;
    }
    for (j, s) in seasonal.iter().enumerate() {
        let sl = (j + 1) * period;
        dense[sl] += s;
        for (i, c) in nonseasonal.iter().enumerate() {
            dense[sl + i + 1] += sign * c * s;
        }
    }
    dense
        .into_iter()
        .enumerate()
        .skip(1)
        .filter(|(_, c)| *c != 0.0)
        .collect()
}

/// AR side: `1 - Σ a_k B^k`, so cross terms enter with a minus sign.
fn ar_poly(ar: &[f64], seasonal_ar: &[f64], period: usize) -> LagPoly {
    expand(ar, seasonal_ar, period, -1.0)
}

fn ma_poly(ma: &[f64], seasonal_ma: &[f64], period: usize) -> LagPoly {
    expand(ma, seasonal_ma, period, 1.0)
}

/// One-step-ahead residuals with pre-sample residuals fixed at zero. The
/// first `start` residuals are not computed (left at zero).
fn residuals(z: &[f64], ar: &LagPoly, ma: &LagPoly, start: usize) -> Vec<f64> {
    let mut e = vec![0.0; z.len()];
    for t in start..z.len() {
        let mut pred = 0.0;
        for &(lag, c) in ar {
            pred += c * z[t - lag];
        }
        for &(lag, c) in ma {
            if lag <= t {
                pred += c * e[t - lag];
            }
        }
        e[t] = z[t] - pred;
    }
    e
}

struct Layout {
    p: usize,
    sp: usize,
    q: usize,
    sq: usize,
}

impl Layout {
    fn new(order: &SarimaOrder) -> Self {
        Self {
            p: order.p,
            sp: order.seasonal_p,
            q: order.q,
            sq: order.seasonal_q,
        }
    }

    /// Splits a flat parameter vector into `(ar, seasonal_ar, ma, seasonal_ma)`.
    fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64], &'a [f64]) {
        let (ar, rest) = x.split_at(self.p);
        let (sar, rest) = rest.split_at(self.sp);
        let (ma, sma) = rest.split_at(self.q);
        debug_assert_eq!(sma.len(), self.sq);
        (ar, sar, ma, sma)
    }
}

fn conditional_ss(z: &[f64], order: &SarimaOrder, layout: &Layout, x: &[f64]) -> f64 {
    let (ar, sar, ma, sma) = layout.split(x);
    let a = ar_poly(ar, sar, order.period);
    let b = ma_poly(ma, sma, order.period);
    let start = order.ar_span();
    residuals(z, &a, &b, start)[start..]
        .iter()
        .map(|e| e * e)
        .sum()
}

/// Fits `order` to `series` by conditional sum of squares.
///
/// Starting values come from a Hannan-Rissanen regression; a Nelder-Mead
/// search then refines them. The zero-coefficient model is always a
/// candidate, so the result never does worse than the intercept alone.
pub fn fit(series: &TimeSeries, order: SarimaOrder) -> Result<SarimaFit, ForecastError> {
    order.validate()?;
    let chain = DifferenceChain::new(series.values(), order.d, order.seasonal_d, order.period)?;
    let w = chain.differenced();
    let k = order.n_coefficients();
    let start = order.ar_span();
    let needed = (10 * (k + 1)).max(start + k + 1);
    if w.len() < needed {
        return Err(ForecastError::TooShort {
            needed: needed + order.differencing_loss(),
            got: series.len(),
        });
    }

    let intercept = if order.differencing_loss() == 0 {
        mean(w)
    } else {
        0.0
    };
    let z: Vec<f64> = w.iter().map(|v| v - intercept).collect();
    let layout = Layout::new(&order);
    let objective = |x: &[f64]| conditional_ss(&z, &order, &layout, x);

    let zeros = vec![0.0; k];
    let initial = hannan_rissanen(&z, &order).unwrap_or_else(|| zeros.clone());
    let opts = SimplexOptions::for_dimension(k);
    let search = minimize(objective, &initial, &opts);
    let baseline = objective(&zeros);
    let (params, css) = if search.value <= baseline {
        (search.point, search.value)
    } else {
        (zeros, baseline)
    };

    let n_obs = w.len() - start;
    let (ar, sar, ma, sma) = layout.split(&params);
    let mut warnings = Vec::new();
    if !is_stationary(ar) {
        warnings.push(FitWarning::NonStationary);
    }
    if !is_stationary(sar) {
        warnings.push(FitWarning::NonStationarySeasonal);
    }
    if !is_invertible(ma) {
        warnings.push(FitWarning::NonInvertible);
    }
    if !is_invertible(sma) {
        warnings.push(FitWarning::NonInvertibleSeasonal);
    }
    let fit = SarimaFit {
        order,
        ar: ar.to_vec(),
        ma: ma.to_vec(),
        seasonal_ar: sar.to_vec(),
        seasonal_ma: sma.to_vec(),
        intercept,
        sigma2: (css / n_obs as f64).max(f64::MIN_POSITIVE),
        n_obs,
        css,
        warnings,
    };
    if search.converged {
        Ok(fit)
    } else {
        Err(ForecastError::NoConvergence {
            evaluations: search.evaluations,
            best: Box::new(fit),
        })
    }
}

/// Two-stage regression start: a long autoregression supplies residual
/// proxies, then the ARMA lags are regressed jointly (seasonal cross terms
/// ignored). Returns `None` when the regression is not identifiable.
fn hannan_rissanen(z: &[f64], order: &SarimaOrder) -> Option<Vec<f64>> {
    let k = order.n_coefficients();
    if k == 0 || is_degenerate(z) {
        return None;
    }
    let n = z.len();
    let m = order.period;
    let has_ma = order.q + order.seasonal_q > 0;

    let mut proxy = vec![0.0; n];
    let mut first_row = order.ar_span();
    if has_ma {
        let long = (order.ar_span() + order.ma_span() + 1).min(n / 3).max(1);
        let gamma = autocovariance(z, long);
        let lev = durbin_levinson(&gamma, long).ok()?;
        for t in long..n {
            proxy[t] = z[t]
                - lev
                    .coefficients
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * z[t - 1 - j])
                    .sum::<f64>();
        }
        first_row = first_row.max(long + order.ma_span());
    }
    let rows = n.checked_sub(first_row)?;
    if rows <= k + 1 {
        return None;
    }

    let lags_z: Vec<usize> = (1..=order.p)
        .chain((1..=order.seasonal_p).map(|j| j * m))
        .collect();
    let lags_e: Vec<usize> = (1..=order.q)
        .chain((1..=order.seasonal_q).map(|j| j * m))
        .collect();
    let x = DMatrix::from_fn(rows, k, |r, c| {
        let t = first_row + r;
        if c < lags_z.len() {
            z[t - lags_z[c]]
        } else {
            proxy[t - lags_e[c - lags_z.len()]]
        }
    });
    let y = DVector::from_fn(rows, |r, _| z[first_row + r]);
    let beta = x.svd(true, true).solve(&y, 1e-12).ok()?;
    if beta.iter().any(|b| !b.is_finite()) {
        return None;
    }
    // Columns already follow the [ar, sar, ma, sma] parameter layout.
    Some(beta.iter().map(|b| b.clamp(-0.99, 0.99)).collect())
}

/// Step-down (reverse Levinson) test: the AR polynomial `1 - Σ c_i B^i` has
/// all roots outside the unit circle iff every reflection coefficient has
/// magnitude below one.
fn is_stationary(coefs: &[f64]) -> bool {
    let mut a = coefs.to_vec();
    while let Some(&kappa) = a.last() {
        if kappa.abs() >= 1.0 || kappa.is_nan() {
            return false;
        }
        let k = a.len();
        let denom = 1.0 - kappa * kappa;
        let prev: Vec<f64> = (0..k - 1)
            .map(|j| (a[j] + kappa * a[k - 2 - j]) / denom)
            .collect();
        a = prev;
    }
    true
}

fn is_invertible(coefs: &[f64]) -> bool {
    let flipped: Vec<f64> = coefs.iter().map(|c| -c).collect();
    is_stationary(&flipped)
}

/// Iterates the fitted recursion forward with future innovations set to
/// zero and integrates back to the original scale.
pub fn forecast(
    fit: &SarimaFit,
    series: &TimeSeries,
    horizon: usize,
    clamp_nonnegative: bool,
) -> Result<ForecastResult, ForecastError> {
    if horizon < 1 {
        return Err(ForecastError::Argument(
            "forecast horizon must be at least 1".into(),
        ));
    }
    let order = fit.order;
    let chain = DifferenceChain::new(series.values(), order.d, order.seasonal_d, order.period)?;
    let w = chain.differenced();
    let span = order.ar_span().max(order.ma_span());
    if w.len() < order.ar_span().max(1) {
        return Err(ForecastError::TooShort {
            needed: order.ar_span().max(1) + order.differencing_loss(),
            got: series.len(),
        });
    }
    let a = ar_poly(&fit.ar, &fit.seasonal_ar, order.period);
    let b = ma_poly(&fit.ma, &fit.seasonal_ma, order.period);
    let mut z: Vec<f64> = w.iter().map(|v| v - fit.intercept).collect();
    let mut e = residuals(&z, &a, &b, order.ar_span());
    let n = z.len();
    debug_assert!(span == 0 || n >= order.ar_span());
    for t in n..n + horizon {
        let mut pred = 0.0;
        for &(lag, c) in &a {
            pred += c * z[t - lag];
        }
        for &(lag, c) in &b {
            if lag <= t {
                pred += c * e[t - lag];
            }
        }
        z.push(pred);
        e.push(0.0);
    }
    let future: Vec<f64> = z[n..].iter().map(|v| v + fit.intercept).collect();
    let mut point = chain.integrate(&future);
    if let Some(i) = point.iter().position(|v| !v.is_finite()) {
        return Err(ForecastError::Argument(format!(
            "forecast diverged at step {}",
            i + 1
        )));
    }
    if clamp_nonnegative {
        for v in &mut point {
            *v = v.max(0.0);
        }
    }
    Ok(ForecastResult { point, horizon })
}

/// `n·ln(σ²) + 2k` with `k = p+q+P+Q+1`.
pub fn aic(fit: &SarimaFit) -> f64 {
    let k = fit.order.n_coefficients() + 1;
    fit.n_obs as f64 * fit.sigma2.ln() + 2.0 * k as f64
}

impl SarimaFit {
    /// In-sample one-step residuals on the differenced scale, from the
    /// first conditioned observation onward.
    pub fn residuals(&self, series: &TimeSeries) -> Result<Vec<f64>, ForecastError> {
        let order = self.order;
        let chain = DifferenceChain::new(series.values(), order.d, order.seasonal_d, order.period)?;
        let z: Vec<f64> = chain
            .differenced()
            .iter()
            .map(|v| v - self.intercept)
            .collect();
        let start = order.ar_span();
        if z.len() <= start {
            return Err(ForecastError::TooShort {
                needed: start + 1 + order.differencing_loss(),
                got: series.len(),
            });
        }
        let a = ar_poly(&self.ar, &self.seasonal_ar, order.period);
        let b = ma_poly(&self.ma, &self.seasonal_ma, order.period);
        Ok(residuals(&z, &a, &b, start).split_off(start))
    }

    /// Flat `key = value` text block.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(text: &str) -> Result<Self, ForecastError> {
        text.parse()
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for SarimaFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "order = {}", self.order)?;
        writeln!(f, "ar = {}", join(&self.ar))?;
        writeln!(f, "ma = {}", join(&self.ma))?;
        writeln!(f, "seasonal_ar = {}", join(&self.seasonal_ar))?;
        writeln!(f, "seasonal_ma = {}", join(&self.seasonal_ma))?;
        writeln!(f, "intercept = {:?}", self.intercept)?;
        writeln!(f, "sigma2 = {:?}", self.sigma2)?;
        writeln!(f, "n_obs = {}", self.n_obs)?;
        writeln!(f, "css = {:?}", self.css)?;
        let warnings: Vec<&str> = self.warnings.iter().map(|w| w.as_str()).collect();
        writeln!(f, "warnings = {}", warnings.join(","))
    }
}

impl FromStr for SarimaFit {
    type Err = ForecastError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut fields = std::collections::HashMap::new();
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ForecastError::Parse(format!("expected `key = value`, got `{line}`"))
            })?;
            fields.insert(key.trim(), value.trim());
        }
        let get = |key: &str| {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| ForecastError::Parse(format!("missing `{key}`")))
        };
        let number = |key: &str| -> Result<f64, ForecastError> {
            get(key)?
                .parse()
                .map_err(|_| ForecastError::Parse(format!("`{key}` is not a number")))
        };
        let list = |key: &str| -> Result<Vec<f64>, ForecastError> {
            get(key)?
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| ForecastError::Parse(format!("bad value `{s}` in `{key}`")))
                })
                .collect()
        };
        let order: SarimaOrder = get("order")?.parse()?;
        let fit = SarimaFit {
            order,
            ar: list("ar")?,
            ma: list("ma")?,
            seasonal_ar: list("seasonal_ar")?,
            seasonal_ma: list("seasonal_ma")?,
            intercept: number("intercept")?,
            sigma2: number("sigma2")?,
            n_obs: get("n_obs")?
                .parse()
                .map_err(|_| ForecastError::Parse("`n_obs` is not an integer".into()))?,
            css: number("css")?,
            warnings: fields
                .get("warnings")
                .map(|w| {
                    w.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::parse)
                        .collect::<Result<Vec<_>, _>>()
                })
                .transpose()?
                .unwrap_or_default(),
        };
        let lengths = [
            (fit.ar.len(), order.p, "ar"),
            (fit.ma.len(), order.q, "ma"),
            (fit.seasonal_ar.len(), order.seasonal_p, "seasonal_ar"),
            (fit.seasonal_ma.len(), order.seasonal_q, "seasonal_ma"),
        ];
        for (got, want, key) in lengths {
            if got != want {
                return Err(ForecastError::Parse(format!(
                    "`{key}` has {got} coefficients but the order needs {want}"
                )));
            }
        }
        Ok(fit)
    }
}
