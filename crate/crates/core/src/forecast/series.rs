use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ForecastError;

/// Ordered, finite observations sampled at a fixed period.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    period_secs: f64,
}

#[derive(Serialize, Deserialize)]
struct ValueRow {
    value: f64,
}

impl TimeSeries {
    /// Hourly series, the sampling used throughout the workload pipeline.
    pub fn hourly(values: Vec<f64>) -> Result<Self, ForecastError> {
        Self::new(values, 3600.0)
    }

    pub fn new(values: Vec<f64>, period_secs: f64) -> Result<Self, ForecastError> {
        if values.is_empty() {
            return Err(ForecastError::TooShort { needed: 1, got: 0 });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ForecastError::Argument(format!(
                "observation {i} is not finite"
            )));
        }
        if !(period_secs.is_finite() && period_secs > 0.0) {
            return Err(ForecastError::Argument(format!(
                "period must be positive, got {period_secs}"
            )));
        }
        Ok(Self {
            values,
            period_secs,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn period_secs(&self) -> f64 {
        self.period_secs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Population variance (divides by n).
    pub fn variance(&self) -> f64 {
        variance(&self.values)
    }

    /// Same period, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self, ForecastError> {
        Self::new(values, self.period_secs)
    }

    /// First `len` observations.
    pub fn head(&self, len: usize) -> Result<Self, ForecastError> {
        self.with_values(self.values[..len.min(self.values.len())].to_vec())
    }

    /// Reads a single-column CSV with header `value`.
    pub fn read_csv<R: Read>(reader: R, period_secs: f64) -> Result<Self, csv::Error> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut values = Vec::new();
        for row in rdr.deserialize() {
            let row: ValueRow = row?;
            values.push(row.value);
        }
        Self::new(values, period_secs).map_err(|e| {
            csv::Error::from(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                e.to_string(),
            ))
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(writer);
        for &value in &self.values {
            wtr.serialize(ValueRow { value })?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

/// True when the spread of `values` is indistinguishable from rounding noise
/// relative to their magnitude.
pub(crate) fn is_degenerate(values: &[f64]) -> bool {
    let m = mean(values);
    let scale = values.iter().fold(m.abs(), |acc, v| acc.max(v.abs()));
    variance(values) <= (scale * 1e-12).powi(2)
}
