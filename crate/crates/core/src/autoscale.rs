//! Replica-count controllers: a reactive utilization-tracking HPA and the
//! forecast-driven PBA, both driving a [`ClusterState`] through the same
//! [`Autoscaler`] contract.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterState, FunctionSpec, MetricsRecord};
use crate::forecast::{self, ForecastError, SarimaFit, SarimaOrder, TimeSeries};
use crate::workload::ArrivalStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Hpa,
    Pba,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Hpa => "HPA",
            Source::Pba => "PBA",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingDecision {
    pub at: f64,
    pub desired_replicas: u32,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HpaConfig {
    pub target_utilization: f64,
    /// Seconds between evaluations.
    pub sync_period: f64,
    /// Dead band around the target, as a fraction of the usage ratio.
    pub tolerance: f64,
    /// Seconds of recommendations a scale-down must agree with.
    pub scale_down_stabilization: f64,
    pub min_replicas: u32,
    pub max_replicas: u32,
}

impl Default for HpaConfig {
    fn default() -> Self {
        Self {
            target_utilization: 0.5,
            sync_period: 15.0,
            tolerance: 0.1,
            scale_down_stabilization: 300.0,
            min_replicas: 0,
            max_replicas: 100,
        }
    }
}

impl HpaConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.target_utilization > 0.0 && self.target_utilization <= 1.0) {
            return Err(format!(
                "target_utilization must be in (0, 1], got {}",
                self.target_utilization
            ));
        }
        if !(self.sync_period.is_finite() && self.sync_period > 0.0) {
            return Err(format!(
                "sync_period must be positive, got {}",
                self.sync_period
            ));
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return Err(format!(
                "tolerance must be non-negative, got {}",
                self.tolerance
            ));
        }
        if !(self.scale_down_stabilization.is_finite() && self.scale_down_stabilization >= 0.0) {
            return Err(format!(
                "scale_down_stabilization must be non-negative, got {}",
                self.scale_down_stabilization
            ));
        }
        if self.max_replicas == 0 {
            return Err("max_replicas must be positive".into());
        }
        if self.min_replicas > self.max_replicas {
            return Err(format!(
                "min_replicas ({}) exceeds max_replicas ({})",
                self.min_replicas, self.max_replicas
            ));
        }
        Ok(())
    }
}

/// A past HPA recommendation, kept for the stabilization window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recommendation {
    pub at: f64,
    pub replicas: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpaOutcome {
    pub decision: ScalingDecision,
    /// Unstabilized recommendation to append to the history.
    pub recommendation: u32,
}

/// Kubernetes-style control law.
///
/// `ceil(current · utilization / target)` outside the tolerance band, one
/// replica when bootstrapping from zero, then the maximum over the
/// recommendations of the stabilization window so scale-downs wait for the
/// window to agree. `history` entries older than the window are ignored.
pub fn hpa_decide(
    current_replicas: u32,
    utilization: f64,
    config: &HpaConfig,
    now: f64,
    history: &[Recommendation],
) -> HpaOutcome {
    let raw = if current_replicas == 0 {
        u32::from(utilization > 0.0)
    } else {
        let ratio = utilization / config.target_utilization;
        if (ratio - 1.0).abs() <= config.tolerance {
            current_replicas
        } else {
            (current_replicas as f64 * ratio).ceil() as u32
        }
    };
    let recommendation = raw.clamp(config.min_replicas, config.max_replicas);
    let window_start = now - config.scale_down_stabilization;
    let stabilized = history
        .iter()
        .filter(|r| r.at > window_start && r.at <= now)
        .map(|r| r.replicas)
        .fold(recommendation, u32::max);
    HpaOutcome {
        decision: ScalingDecision {
            at: now,
            desired_replicas: stabilized.clamp(config.min_replicas, config.max_replicas),
            source: Source::Hpa,
        },
        recommendation,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PbaConfig {
    pub req_per_pod: u32,
    /// Offset of the first re-scale before the end of the first interval, seconds.
    pub initial_delay: f64,
    /// Seconds per prediction interval.
    pub interval: f64,
    /// How long before each later interval boundary a decision fires, seconds.
    pub lead_time: f64,
    pub max_replicas: u32,
    /// Pins the SARIMA order instead of identifying it from the history.
    pub order: Option<String>,
}

impl Default for PbaConfig {
    fn default() -> Self {
        Self {
            req_per_pod: 40,
            initial_delay: 30.0,
            interval: 3600.0,
            lead_time: 30.0,
            max_replicas: 100,
            order: None,
        }
    }
}

impl PbaConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.req_per_pod == 0 {
            return Err("req_per_pod must be at least 1".into());
        }
        if !(self.interval.is_finite() && self.interval > 0.0) {
            return Err(format!("interval must be positive, got {}", self.interval));
        }
        if !(self.lead_time.is_finite() && self.lead_time >= 0.0 && self.lead_time < self.interval)
        {
            return Err(format!(
                "lead_time must be in [0, interval), got {}",
                self.lead_time
            ));
        }
        if !(self.initial_delay.is_finite()
            && self.initial_delay >= 0.0
            && self.initial_delay < self.interval)
        {
            return Err(format!(
                "initial_delay must be in [0, interval), got {}",
                self.initial_delay
            ));
        }
        if self.max_replicas == 0 {
            return Err("max_replicas must be positive".into());
        }
        if let Some(order) = &self.order {
            order
                .parse::<SarimaOrder>()
                .map_err(|e| format!("order: {e}"))?;
        }
        Ok(())
    }

    pub fn pinned_order(&self) -> Option<SarimaOrder> {
        self.order.as_deref().and_then(|o| o.parse().ok())
    }

    /// Simulation time of the `k`-th decision. The first fires at once; the
    /// second `interval - initial_delay` later; every later one `lead_time`
    /// ahead of its interval boundary.
    pub fn decision_time(&self, k: usize) -> f64 {
        match k {
            0 => 0.0,
            1 => (self.interval - self.initial_delay).max(0.0),
            _ => (k as f64 * self.interval - self.lead_time).max(0.0),
        }
    }
}

/// Pods needed for a predicted rate: `ceil(rate / req_per_pod)`.
pub fn pods_for(prediction: f64, req_per_pod: u32) -> u32 {
    if prediction <= 0.0 || !prediction.is_finite() {
        return 0;
    }
    (prediction / req_per_pod as f64).ceil() as u32
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PbaDecision {
    pub decision: ScalingDecision,
    /// Pods for the upcoming interval.
    pub ft: u32,
    /// Pods for the current interval.
    pub ct: u32,
    /// Prediction behind `ft`.
    pub prediction: f64,
}

/// Sizes the replica set for the boundary between `interval_index` and the
/// interval after it: `max(ft, ct)`, with `ft` falling back to `ct` past the
/// end of the horizon.
pub fn pba_decide(predictions: &[f64], interval_index: usize, config: &PbaConfig) -> PbaDecision {
    let current = predictions[interval_index];
    let next = predictions.get(interval_index + 1).copied();
    let ct = pods_for(current, config.req_per_pod);
    let ft = next.map_or(ct, |p| pods_for(p, config.req_per_pod));
    PbaDecision {
        decision: ScalingDecision {
            at: config.decision_time(interval_index + 1),
            desired_replicas: ft.max(ct).min(config.max_replicas),
            source: Source::Pba,
        },
        ft,
        ct,
        prediction: next.unwrap_or(current),
    }
}

/// The opening decision, sized for the first interval alone.
pub fn pba_first(predictions: &[f64], config: &PbaConfig) -> PbaDecision {
    let ct = pods_for(predictions[0], config.req_per_pod);
    PbaDecision {
        decision: ScalingDecision {
            at: config.decision_time(0),
            desired_replicas: ct.min(config.max_replicas),
            source: Source::Pba,
        },
        ft: ct,
        ct,
        prediction: predictions[0],
    }
}

/// Re-buckets per-period predictions onto PBA intervals, taking the largest
/// prediction overlapping each interval.
pub fn interval_predictions(per_period: &[f64], period: f64, interval: f64) -> Vec<f64> {
    let total = per_period.len() as f64 * period;
    let count = (total / interval).ceil() as usize;
    (0..count)
        .map(|i| {
            let start = i as f64 * interval;
            let end = (start + interval).min(total);
            let first = (start / period).floor() as usize;
            let last = ((end / period).ceil() as usize).min(per_period.len());
            per_period[first..last.max(first + 1)]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecasterConfig {
    /// Seasonal period in observations.
    pub period: usize,
    pub order: Option<SarimaOrder>,
}

impl Default for ForecasterConfig {
    fn default() -> Self {
        Self {
            period: 24,
            order: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Non-negative predictions, one per future period.
    pub predictions: Vec<f64>,
    pub order: Option<SarimaOrder>,
    pub fit: Option<SarimaFit>,
    /// Why the seasonal-naive fallback was used, if it was.
    pub fallback: Option<String>,
}

/// Fits SARIMA on `history` and forecasts `horizon` periods, clamped at
/// zero. Any forecasting failure degrades to repeating the last season.
pub fn pba_pipeline(
    history: &TimeSeries,
    horizon: usize,
    config: &ForecasterConfig,
) -> Result<PipelineOutput, ForecastError> {
    if horizon == 0 {
        return Err(ForecastError::Argument(
            "forecast horizon must be at least 1".into(),
        ));
    }
    let attempt = || -> Result<(SarimaOrder, SarimaFit, Vec<f64>), ForecastError> {
        let order = match config.order {
            Some(o) => o,
            None => forecast::suggest_order(history, config.period)?,
        };
        let fit = forecast::fit(history, order)?;
        let out = forecast::forecast(&fit, history, horizon, true)?;
        Ok((order, fit, out.point))
    };
    Ok(match attempt() {
        Ok((order, fit, predictions)) => PipelineOutput {
            predictions,
            order: Some(order),
            fit: Some(fit),
            fallback: None,
        },
        Err(e) => PipelineOutput {
            predictions: seasonal_naive(history.values(), config.period, horizon),
            order: None,
            fit: None,
            fallback: Some(e.to_string()),
        },
    })
}

/// Repeats the last `period` observations (the last one if fewer exist).
pub fn seasonal_naive(history: &[f64], period: usize, horizon: usize) -> Vec<f64> {
    let period = period.clamp(1, history.len().max(1));
    let season = &history[history.len().saturating_sub(period)..];
    season
        .iter()
        .cycle()
        .take(horizon)
        .map(|v| v.max(0.0))
        .collect()
}

/// One row of the decisions log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub time: f64,
    pub source: String,
    pub desired: u32,
    pub ft: Option<u32>,
    pub ct: Option<u32>,
    pub prediction: Option<f64>,
}

impl From<HpaOutcome> for DecisionRecord {
    fn from(o: HpaOutcome) -> Self {
        Self {
            time: o.decision.at,
            source: o.decision.source.to_string(),
            desired: o.decision.desired_replicas,
            ft: None,
            ct: None,
            prediction: None,
        }
    }
}

impl From<PbaDecision> for DecisionRecord {
    fn from(d: PbaDecision) -> Self {
        Self {
            time: d.decision.at,
            source: d.decision.source.to_string(),
            desired: d.decision.desired_replicas,
            ft: Some(d.ft),
            ct: Some(d.ct),
            prediction: Some(d.prediction),
        }
    }
}

pub fn write_decisions_csv<W: Write>(
    records: &[DecisionRecord],
    writer: W,
) -> Result<(), csv::Error> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    wtr.write_record(["time", "source", "desired", "ft", "ct", "prediction"])?;
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Controller bound to one simulation run.
pub trait Autoscaler {
    fn source(&self) -> Source;

    /// Whether the platform's idle scale-to-zero stays active under this
    /// controller.
    fn idle_reaping(&self) -> bool {
        true
    }

    /// Called at the start of every tick, before that tick's arrivals.
    fn decide(&mut self, state: &ClusterState, spec: &FunctionSpec) -> Option<DecisionRecord>;

    /// Called with each tick's metrics once the tick completes.
    fn observe(&mut self, _record: &MetricsRecord) {}
}

/// Runs [`hpa_decide`] every `sync_period` on the mean arrival rate seen
/// since the previous sync plus the current backlog.
#[derive(Debug, Clone)]
pub struct HpaController {
    config: HpaConfig,
    history: VecDeque<Recommendation>,
    window_arrivals: u64,
    window_seconds: f64,
    tick_seconds: f64,
    next_sync: f64,
}

impl HpaController {
    pub fn new(config: HpaConfig) -> Self {
        Self {
            config,
            history: VecDeque::new(),
            window_arrivals: 0,
            window_seconds: 0.0,
            tick_seconds: 1.0,
            next_sync: 0.0,
        }
    }
}

impl Autoscaler for HpaController {
    fn source(&self) -> Source {
        Source::Hpa
    }

    fn decide(&mut self, state: &ClusterState, spec: &FunctionSpec) -> Option<DecisionRecord> {
        let now = state.now();
        self.tick_seconds = state.tick_length() as f64;
        if now < self.next_sync {
            return None;
        }
        while self.next_sync <= now {
            self.next_sync += self.config.sync_period;
        }
        let rate = if self.window_seconds > 0.0 {
            self.window_arrivals as f64 / self.window_seconds
        } else {
            0.0
        };
        self.window_arrivals = 0;
        self.window_seconds = 0.0;
        let utilization = state.utilization(rate, spec);
        let horizon = now - self.config.scale_down_stabilization;
        while self.history.front().is_some_and(|r| r.at <= horizon) {
            self.history.pop_front();
        }
        let outcome = hpa_decide(
            state.ready_count(),
            utilization,
            &self.config,
            now,
            self.history.make_contiguous(),
        );
        self.history.push_back(Recommendation {
            at: now,
            replicas: outcome.recommendation,
        });
        Some(outcome.into())
    }

    fn observe(&mut self, record: &MetricsRecord) {
        self.window_arrivals += record.arrivals;
        self.window_seconds += self.tick_seconds;
    }
}

/// Replays the PBA schedule over a fixed prediction sequence, one value per
/// interval.
#[derive(Debug, Clone)]
pub struct PbaController {
    config: PbaConfig,
    predictions: Vec<f64>,
    next: usize,
}

impl PbaController {
    pub fn new(config: PbaConfig, predictions: Vec<f64>) -> Self {
        Self {
            config,
            predictions,
            next: 0,
        }
    }
}

impl Autoscaler for PbaController {
    fn source(&self) -> Source {
        Source::Pba
    }

    /// PBA sizes the set itself, down to zero when no traffic is forecast.
    fn idle_reaping(&self) -> bool {
        false
    }

    fn decide(&mut self, state: &ClusterState, _spec: &FunctionSpec) -> Option<DecisionRecord> {
        let mut latest = None;
        while self.next < self.predictions.len()
            && self.config.decision_time(self.next) <= state.now()
        {
            let d = if self.next == 0 {
                pba_first(&self.predictions, &self.config)
            } else {
                pba_decide(&self.predictions, self.next - 1, &self.config)
            };
            latest = Some(d);
            self.next += 1;
        }
        latest.map(|mut d| {
            d.decision.at = state.now();
            d.into()
        })
    }
}

/// Per-tick metrics and the decisions behind them.
#[derive(Debug, Clone, Default)]
pub struct SimulationRun {
    pub records: Vec<MetricsRecord>,
    pub decisions: Vec<DecisionRecord>,
}

/// Drives an empty cluster through `arrivals`, letting `autoscaler` act at
/// the start of every tick.
pub fn simulate(
    arrivals: &ArrivalStream,
    spec: &FunctionSpec,
    autoscaler: &mut dyn Autoscaler,
) -> SimulationRun {
    let mut state = ClusterState::new(arrivals.tick_length);
    state.set_idle_reaping(autoscaler.idle_reaping());
    let mut run = SimulationRun {
        records: Vec::with_capacity(arrivals.per_tick.len()),
        decisions: Vec::new(),
    };
    for &count in &arrivals.per_tick {
        if let Some(decision) = autoscaler.decide(&state, spec) {
            state.apply_decision(decision.desired, spec);
            run.decisions.push(decision);
        }
        let record = state.step(u64::from(count), spec);
        autoscaler.observe(&record);
        run.records.push(record);
    }
    run
}

#[cfg(test)]
mod tests;
