use std::fmt;
use std::str::FromStr;

use super::correlation::{acf_values, pacf_values};
use super::difference::lag_difference;
use super::series::{is_degenerate, variance};
use super::{ForecastError, TimeSeries};

/// SARIMA orders `(p,d,q)(P,D,Q,m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SarimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub seasonal_p: usize,
    pub seasonal_d: usize,
    pub seasonal_q: usize,
    pub period: usize,
}

impl SarimaOrder {
    pub fn new(
        (p, d, q): (usize, usize, usize),
        (seasonal_p, seasonal_d, seasonal_q, period): (usize, usize, usize, usize),
    ) -> Result<Self, ForecastError> {
        let order = Self {
            p,
            d,
            q,
            seasonal_p,
            seasonal_d,
            seasonal_q,
            period,
        };
        order.validate()?;
        Ok(order)
    }

    /// Plain ARIMA(p,d,q).
    pub fn arima(p: usize, d: usize, q: usize) -> Self {
        Self {
            p,
            d,
            q,
            seasonal_p: 0,
            seasonal_d: 0,
            seasonal_q: 0,
            period: 1,
        }
    }

    pub fn validate(&self) -> Result<(), ForecastError> {
        if self.period == 0 {
            return Err(ForecastError::Argument(
                "seasonal period must be at least 1".into(),
            ));
        }
        if self.is_seasonal() && self.period < 2 {
            return Err(ForecastError::Argument(format!(
                "seasonal terms in {self} need a period of at least 2"
            )));
        }
        Ok(())
    }

    fn is_seasonal(&self) -> bool {
        self.seasonal_p + self.seasonal_d + self.seasonal_q > 0
    }

    /// Number of estimated ARMA coefficients.
    pub fn n_coefficients(&self) -> usize {
        self.p + self.q + self.seasonal_p + self.seasonal_q
    }

    /// Observations consumed by differencing.
    pub fn differencing_loss(&self) -> usize {
        self.d + self.seasonal_d * self.period
    }

    /// Highest lag of the expanded autoregressive polynomial.
    pub fn ar_span(&self) -> usize {
        self.p + self.seasonal_p * self.period
    }

    /// Highest lag of the expanded moving-average polynomial.
    pub fn ma_span(&self) -> usize {
        self.q + self.seasonal_q * self.period
    }
}

impl fmt::Display for SarimaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({},{},{})({},{},{},{})",
            self.p, self.d, self.q, self.seasonal_p, self.seasonal_d, self.seasonal_q, self.period
        )
    }
}

impl FromStr for SarimaOrder {
    type Err = ForecastError;

    /// Accepts `(p,d,q)(P,D,Q,m)` or seven comma-separated integers.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let nums: Vec<usize> = s
            .split(|c: char| c == ',' || c == '(' || c == ')' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>().map_err(|_| {
                    ForecastError::Parse(format!("bad order component `{t}` in `{s}`"))
                })
            })
            .collect::<Result<_, _>>()?;
        match *nums.as_slice() {
            [p, d, q, sp, sd, sq, m] => Self::new((p, d, q), (sp, sd, sq, m)),
            [p, d, q] => Ok(Self::arima(p, d, q)),
            _ => Err(ForecastError::Parse(format!(
                "expected (p,d,q)(P,D,Q,m), got `{s}`"
            ))),
        }
    }
}

/// Differencing is kept when it removes at least 80% of the variance, which
/// for a single lag means an autocorrelation above 0.9 at that lag.
const DIFFERENCING_VARIANCE_RATIO: f64 = 0.2;
const MAX_NONSEASONAL_LAG: usize = 5;
const MAX_SEASONAL_MULTIPLE: usize = 3;

/// Box-Jenkins style order identification from variance reduction and
/// ACF/PACF cut-offs against the ±1.96/√n white-noise band.
pub fn suggest_order(series: &TimeSeries, m: usize) -> Result<SarimaOrder, ForecastError> {
    if m == 0 {
        return Err(ForecastError::Argument(
            "seasonal period must be at least 1".into(),
        ));
    }
    let needed = (3 * m).max(3);
    if series.len() < needed {
        return Err(ForecastError::TooShort {
            needed,
            got: series.len(),
        });
    }

    let mut order = SarimaOrder::arima(0, 0, 0);
    order.period = m;
    let mut values = series.values().to_vec();

    if m >= 2 && wants_difference(&values, m) {
        order.seasonal_d = 1;
        values = lag_difference(&values, m);
    }
    if wants_difference(&values, 1) {
        order.d = 1;
        values = lag_difference(&values, 1);
    }
    if values.len() < 3 || is_degenerate(&values) {
        return Ok(order);
    }

    let n = values.len();
    let band = 1.96 / (n as f64).sqrt();
    let mut nonseasonal_max = MAX_NONSEASONAL_LAG.min(n - 1);
    if m >= 2 {
        nonseasonal_max = nonseasonal_max.min(m - 1);
    }
    let seasonal_lags: Vec<usize> = if m >= 2 {
        (1..=MAX_SEASONAL_MULTIPLE)
            .map(|k| k * m)
            .take_while(|&lag| lag < n)
            .collect()
    } else {
        Vec::new()
    };
    let max_lag = seasonal_lags
        .last()
        .copied()
        .unwrap_or(0)
        .max(nonseasonal_max);
    if max_lag == 0 {
        return Ok(order);
    }

    let r = acf_values(&values, max_lag)?;
    let partial = pacf_values(&values, max_lag)?;
    let significant_acf = |lag: usize| r[lag].abs() > band;
    let significant_pacf = |lag: usize| partial[lag - 1].abs() > band;

    order.p = (1..=nonseasonal_max)
        .rev()
        .find(|&k| significant_pacf(k))
        .unwrap_or(0);
    order.q = (1..=nonseasonal_max)
        .rev()
        .find(|&k| significant_acf(k))
        .unwrap_or(0);
    order.seasonal_p = seasonal_lags
        .iter()
        .rposition(|&lag| significant_pacf(lag))
        .map_or(0, |i| i + 1);
    order.seasonal_q = seasonal_lags
        .iter()
        .rposition(|&lag| significant_acf(lag))
        .map_or(0, |i| i + 1);
    Ok(order)
}

fn wants_difference(values: &[f64], lag: usize) -> bool {
    if values.len() <= lag + 1 || is_degenerate(values) {
        return false;
    }
    let diffed = lag_difference(values, lag);
    variance(&diffed) < DIFFERENCING_VARIANCE_RATIO * variance(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn display_and_parse() {
        let o = SarimaOrder::new((3, 0, 0), (3, 0, 2, 24)).unwrap();
        assert_eq!(o.to_string(), "(3,0,0)(3,0,2,24)");
        assert_eq!("(3,0,0)(3,0,2,24)".parse::<SarimaOrder>().unwrap(), o);
        assert_eq!("3, 0, 0, 3, 0, 2, 24".parse::<SarimaOrder>().unwrap(), o);
        assert_eq!(
            "(1,1,0)".parse::<SarimaOrder>().unwrap(),
            SarimaOrder::arima(1, 1, 0)
        );
        assert!("(1,1)".parse::<SarimaOrder>().is_err());
        assert!("(a,1,1)".parse::<SarimaOrder>().is_err());
    }

    #[test]
    fn seasonal_terms_need_a_period() {
        assert!(SarimaOrder::new((0, 0, 0), (1, 0, 0, 1)).is_err());
        assert!(SarimaOrder::new((0, 0, 0), (0, 0, 0, 0)).is_err());
        assert!(SarimaOrder::new((1, 0, 0), (0, 0, 0, 1)).is_ok());
    }

    #[test]
    fn periodic_series_gets_seasonal_difference() {
        let day: Vec<f64> = (0..24)
            .map(|h| 10.0 + (h as f64 * 0.7).sin() * 5.0 + h as f64)
            .collect();
        let values: Vec<f64> = day.iter().cycle().take(240).copied().collect();
        let o = suggest_order(&TimeSeries::hourly(values).unwrap(), 24).unwrap();
        assert_eq!(o.seasonal_d, 1);
        assert_eq!(o, SarimaOrder::new((0, 0, 0), (0, 1, 0, 24)).unwrap());
    }

    #[test]
    fn white_noise_gets_empty_order() {
        // Fixed seed: with 16 lags tested, roughly 44% of white-noise draws
        // keep every lag inside the band.
        let o = suggest_order(&TimeSeries::hourly(noise(240, 1)).unwrap(), 24).unwrap();
        assert_eq!(o, SarimaOrder::new((0, 0, 0), (0, 0, 0, 24)).unwrap());
    }

    #[test]
    fn ar1_series_gets_ar_term_without_differencing() {
        let e = noise(2200, 9);
        let mut x = vec![0.0; e.len()];
        for t in 1..x.len() {
            x[t] = 0.8 * x[t - 1] + e[t];
        }
        let o = suggest_order(&TimeSeries::hourly(x[200..].to_vec()).unwrap(), 24).unwrap();
        assert!(o.p >= 1, "{o}");
        assert_eq!(o.d, 0);
        assert_eq!(o.seasonal_d, 0);
    }

    #[test]
    fn random_walk_gets_first_difference() {
        let e = noise(300, 2);
        let x: Vec<f64> = e
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect();
        let o = suggest_order(&TimeSeries::hourly(x).unwrap(), 24).unwrap();
        assert_eq!(o.d, 1);
    }

    #[test]
    fn short_series_is_rejected() {
        let s = TimeSeries::hourly(noise(71, 0)).unwrap();
        assert!(matches!(
            suggest_order(&s, 24),
            Err(ForecastError::TooShort { .. })
        ));
    }

    #[test]
    fn deterministic() {
        let s = TimeSeries::hourly(noise(500, 4)).unwrap();
        assert_eq!(
            suggest_order(&s, 24).unwrap(),
            suggest_order(&s, 24).unwrap()
        );
    }
}
