//! Synthetic diurnal request-rate traces and their expansion into per-tick
//! arrivals.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::forecast::{ForecastError, TimeSeries};

pub const HOURS_PER_DAY: usize = 24;
pub const SECONDS_PER_HOUR: u32 = 3600;

#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error("invalid workload spec: {0}")]
    Spec(String),

    #[error("tick length {0} s does not divide one hour")]
    TickLength(u32),

    #[error("trace length {0} is not a whole number of days")]
    PartialDay(usize),

    #[error("trace contains a negative or non-finite rate at hour {0}")]
    BadRate(usize),
}

/// Parameters of the synthetic diurnal generator. Rates are requests/second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSpec {
    pub days: usize,
    pub base_rate: f64,
    pub peak_rate: f64,
    pub peak_hour: usize,
    pub noise_fraction: f64,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            days: 10,
            base_rate: 0.0,
            peak_rate: 60.0,
            peak_hour: 15,
            noise_fraction: 0.1,
            seed: 42,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), WorkloadError> {
        if self.days == 0 {
            return Err(WorkloadError::Spec("days must be positive".into()));
        }
        if !(self.base_rate.is_finite() && self.base_rate >= 0.0) {
            return Err(WorkloadError::Spec(format!(
                "base_rate must be non-negative, got {}",
                self.base_rate
            )));
        }
        if !(self.peak_rate.is_finite() && self.peak_rate > self.base_rate) {
            return Err(WorkloadError::Spec(format!(
                "peak_rate must exceed base_rate, got {} <= {}",
                self.peak_rate, self.base_rate
            )));
        }
        if self.peak_hour >= HOURS_PER_DAY {
            return Err(WorkloadError::Spec(format!(
                "peak_hour must be in 0..24, got {}",
                self.peak_hour
            )));
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return Err(WorkloadError::Spec(format!(
                "noise_fraction must be in [0, 1), got {}",
                self.noise_fraction
            )));
        }
        Ok(())
    }
}

/// Raised-cosine daily profile: 1 at `peak_hour`, 0 twelve hours away.
pub fn diurnal_shape(hour: usize, peak_hour: usize) -> f64 {
    let offset = hour as f64 - peak_hour as f64;
    0.5 * (1.0 + (2.0 * PI * offset / HOURS_PER_DAY as f64).cos())
}

/// Hourly average request rates (requests/second).
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadTrace {
    hourly: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TraceRow {
    hour: usize,
    rate: f64,
}

impl WorkloadTrace {
    pub fn new(hourly: Vec<f64>) -> Result<Self, WorkloadError> {
        if hourly.is_empty() || !hourly.len().is_multiple_of(HOURS_PER_DAY) {
            return Err(WorkloadError::PartialDay(hourly.len()));
        }
        if let Some(i) = hourly.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(WorkloadError::BadRate(i));
        }
        Ok(Self { hourly })
    }

    pub fn hourly(&self) -> &[f64] {
        &self.hourly
    }

    pub fn days(&self) -> usize {
        self.hourly.len() / HOURS_PER_DAY
    }

    /// Whole days `[from, to)`.
    pub fn days_range(&self, from: usize, to: usize) -> Result<Self, WorkloadError> {
        if from >= to || to > self.days() {
            return Err(WorkloadError::Spec(format!(
                "day range {from}..{to} outside a {}-day trace",
                self.days()
            )));
        }
        Self::new(self.hourly[from * HOURS_PER_DAY..to * HOURS_PER_DAY].to_vec())
    }

    pub fn to_series(&self) -> Result<TimeSeries, ForecastError> {
        TimeSeries::hourly(self.hourly.clone())
    }

    /// Reads a `hour,rate` CSV. Rows must be in hour order starting at 0.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, csv::Error> {
        let invalid = |msg: String| {
            csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, msg))
        };
        let mut rdr = csv::Reader::from_reader(reader);
        let mut hourly = Vec::new();
        for row in rdr.deserialize() {
            let row: TraceRow = row?;
            if row.hour != hourly.len() {
                return Err(invalid(format!(
                    "expected hour {}, found {}",
                    hourly.len(),
                    row.hour
                )));
            }
            hourly.push(row.rate);
        }
        Self::new(hourly).map_err(|e| invalid(e.to_string()))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(writer);
        for (hour, &rate) in self.hourly.iter().enumerate() {
            wtr.serialize(TraceRow { hour, rate })?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// `rate = base + (peak - base) · shape(h) · (1 + ε)` with `ε ~ U(±noise)`.
pub fn generate_trace(spec: &WorkloadSpec) -> Result<WorkloadTrace, WorkloadError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let span = spec.peak_rate - spec.base_rate;
    let hourly = (0..spec.days * HOURS_PER_DAY)
        .map(|i| {
            let shape = diurnal_shape(i % HOURS_PER_DAY, spec.peak_hour);
            let eps = if spec.noise_fraction > 0.0 {
                rng.random_range(-spec.noise_fraction..spec.noise_fraction)
            } else {
                0.0
            };
            (spec.base_rate + span * shape * (1.0 + eps)).max(0.0)
        })
        .collect();
    WorkloadTrace::new(hourly)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalMode {
    /// Floor of the cumulative expected volume: exact totals, no randomness.
    Deterministic,
    /// Independent Poisson counts per tick.
    Poisson,
}

/// Requests arriving in each simulation tick.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalStream {
    pub per_tick: Vec<u32>,
    pub tick_length: u32,
}

impl ArrivalStream {
    pub fn ticks_per_hour(&self) -> usize {
        (SECONDS_PER_HOUR / self.tick_length) as usize
    }

    pub fn total(&self) -> u64 {
        self.per_tick.iter().map(|&a| a as u64).sum()
    }
}

pub fn expand_arrivals(
    trace: &WorkloadTrace,
    tick_length: u32,
    mode: ArrivalMode,
    seed: u64,
) -> Result<ArrivalStream, WorkloadError> {
    if tick_length == 0 || !SECONDS_PER_HOUR.is_multiple_of(tick_length) {
        return Err(WorkloadError::TickLength(tick_length));
    }
    let ticks = (SECONDS_PER_HOUR / tick_length) as usize;
    let tick = tick_length as f64;
    let mut per_tick = Vec::with_capacity(trace.hourly().len() * ticks);
    match mode {
        ArrivalMode::Deterministic => {
            let mut hour_start = 0.0f64;
            let mut emitted = 0u64;
            for &rate in trace.hourly() {
                for i in 0..ticks {
                    let expected = hour_start + rate * tick * (i + 1) as f64;
                    // Guard against 0.1·10 landing just below an integer.
                    let target = (expected + 1e-9).floor() as u64;
                    let count = target.saturating_sub(emitted);
                    emitted += count;
                    per_tick.push(count as u32);
                }
                hour_start += rate * SECONDS_PER_HOUR as f64;
            }
        }
        ArrivalMode::Poisson => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for &rate in trace.hourly() {
                let mean = rate * tick;
                let dist = (mean > 0.0).then(|| Poisson::new(mean).expect("positive finite mean"));
                for _ in 0..ticks {
                    let count = dist.as_ref().map_or(0.0, |d| d.sample(&mut rng));
                    per_tick.push(count as u32);
                }
            }
        }
    }
    Ok(ArrivalStream {
        per_tick,
        tick_length,
    })
}
