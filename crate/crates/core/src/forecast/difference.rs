use super::{ForecastError, TimeSeries};

/// Applies the lag-`lag` difference operator `times` times.
pub fn difference(
    series: &TimeSeries,
    lag: usize,
    times: usize,
) -> Result<TimeSeries, ForecastError> {
    if lag == 0 {
        return Err(ForecastError::Argument(
            "difference lag must be positive".into(),
        ));
    }
    let needed = lag * times + 1;
    if series.len() < needed {
        return Err(ForecastError::TooShort {
            needed,
            got: series.len(),
        });
    }
    let mut values = series.values().to_vec();
    for _ in 0..times {
        values = lag_difference(&values, lag);
    }
    series.with_values(values)
}

/// Inverts one differencing pass: `initial` seeds the first `lag` values.
pub fn undifference(
    diffed: &TimeSeries,
    initial: &[f64],
    lag: usize,
) -> Result<TimeSeries, ForecastError> {
    if lag == 0 {
        return Err(ForecastError::Argument(
            "difference lag must be positive".into(),
        ));
    }
    if initial.len() != lag {
        return Err(ForecastError::Argument(format!(
            "undifference needs exactly {lag} seed values, got {}",
            initial.len()
        )));
    }
    let mut out = Vec::with_capacity(lag + diffed.len());
    out.extend_from_slice(initial);
    for (t, d) in diffed.values().iter().enumerate() {
        out.push(d + out[t]);
    }
    diffed.with_values(out)
}

pub(crate) fn lag_difference(values: &[f64], lag: usize) -> Vec<f64> {
    values.windows(lag + 1).map(|w| w[lag] - w[0]).collect()
}

/// Every intermediate stage of `d` lag-1 passes followed by `seasonal_d`
/// lag-`m` passes, starting with the raw values. Forecasts are integrated
/// back up this chain.
pub(crate) struct DifferenceChain {
    stages: Vec<Vec<f64>>,
    lags: Vec<usize>,
}

impl DifferenceChain {
    pub(crate) fn new(
        values: &[f64],
        d: usize,
        seasonal_d: usize,
        m: usize,
    ) -> Result<Self, ForecastError> {
        let lags: Vec<usize> = std::iter::repeat_n(1, d)
            .chain(std::iter::repeat_n(m, seasonal_d))
            .collect();
        let needed = lags.iter().sum::<usize>() + 1;
        if values.len() < needed {
            return Err(ForecastError::TooShort {
                needed,
                got: values.len(),
            });
        }
        let mut stages = vec![values.to_vec()];
        for &lag in &lags {
            let next = lag_difference(stages.last().expect("non-empty"), lag);
            stages.push(next);
        }
        Ok(Self { stages, lags })
    }

    pub(crate) fn differenced(&self) -> &[f64] {
        self.stages.last().expect("non-empty")
    }

    /// Maps forecasts of the fully differenced series back to the original
    /// scale by extending every stage in turn.
    pub(crate) fn integrate(&self, forecasts: &[f64]) -> Vec<f64> {
        let mut extension = forecasts.to_vec();
        for (stage, &lag) in self.stages.iter().rev().skip(1).zip(self.lags.iter().rev()) {
            let mut extended = stage.clone();
            for &d in &extension {
                let base = extended[extended.len() - lag];
                extended.push(d + base);
            }
            extension = extended.split_off(stage.len());
        }
        extension
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::hourly(v.to_vec()).unwrap()
    }

    #[test]
    fn first_difference_examples() {
        assert_eq!(
            difference(&ts(&[1., 2., 3., 4.]), 1, 1).unwrap().values(),
            &[1., 1., 1.]
        );
        assert_eq!(
            difference(&ts(&[5., 5., 5., 5.]), 1, 1).unwrap().values(),
            &[0., 0., 0.]
        );
        assert_eq!(
            difference(&ts(&[1., 2., 3., 4., 5., 6.]), 3, 1)
                .unwrap()
                .values(),
            &[3., 3., 3.]
        );
    }

    #[test]
    fn zero_times_is_identity() {
        let s = ts(&[3., 1., 4.]);
        assert_eq!(difference(&s, 7, 0).unwrap(), s);
    }

    #[test]
    fn too_short_is_an_error() {
        assert!(matches!(
            difference(&ts(&[1., 2., 3.]), 3, 1),
            Err(ForecastError::TooShort { needed: 4, got: 3 })
        ));
        assert!(difference(&ts(&[1., 2., 3.]), 1, 3).is_err());
        assert!(difference(&ts(&[1., 2., 3.]), 1, 2).is_ok());
    }

    #[test]
    fn undifference_examples() {
        assert_eq!(
            undifference(&ts(&[1., 1., 1.]), &[1.], 1).unwrap().values(),
            &[1., 2., 3., 4.]
        );
        assert_eq!(
            undifference(&ts(&[0., 0., 0.]), &[5.], 1).unwrap().values(),
            &[5., 5., 5., 5.]
        );
        assert_eq!(
            undifference(&ts(&[3., 3., 3.]), &[1., 2., 3.], 3)
                .unwrap()
                .values(),
            &[1., 2., 3., 4., 5., 6.]
        );
    }

    #[test]
    fn undifference_rejects_wrong_seed_length() {
        assert!(matches!(
            undifference(&ts(&[1., 1.]), &[1., 2.], 1),
            Err(ForecastError::Argument(_))
        ));
    }

    #[test]
    fn chain_integrates_seasonal_and_regular_passes() {
        // Linear trend plus a period-4 pattern: (1-B)(1-B^4) annihilates it.
        let pattern = [0., 3., -1., 2.];
        let values: Vec<f64> = (0..20).map(|t| 0.5 * t as f64 + pattern[t % 4]).collect();
        let chain = DifferenceChain::new(&values[..16], 1, 1, 4).unwrap();
        assert!(chain.differenced().iter().all(|v| v.abs() < 1e-12));
        let ext = chain.integrate(&[0.0; 4]);
        for (a, b) in ext.iter().zip(&values[16..]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(
            ints in prop::collection::vec(-1_000_000i64..1_000_000, 30..120),
            lag in prop::sample::select(vec![1usize, 7, 24]),
        ) {
            // Integers scaled by a power of two are exactly representable.
            let values: Vec<f64> = ints.iter().map(|&i| i as f64 / 8.0).collect();
            let s = ts(&values);
            let d = difference(&s, lag, 1).unwrap();
            let back = undifference(&d, &values[..lag], lag).unwrap();
            prop_assert_eq!(back.values(), s.values());
        }
    }
}
