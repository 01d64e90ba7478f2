//! Fixed-timestep simulation of one serverless function's replica set.
//!
//! Every served request pays `exec_time`, plus its queueing delay, plus
//! `cold_penalty` when it could not be served in the tick it arrived
//! (it had to wait for a pod to become available).

use std::collections::VecDeque;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FunctionSpec {
    /// Warm per-request service time, seconds.
    pub exec_time: f64,
    /// Extra latency of a cold request, seconds.
    pub cold_penalty: f64,
    /// Requests per second one ready pod serves.
    pub req_per_pod: u32,
    /// Starting → Ready delay, seconds.
    pub pod_startup: f64,
    /// Traffic-free window after which every pod is removed, seconds.
    pub idle_timeout: f64,
    pub cpu_per_req: f64,
    pub mem_per_pod: f64,
}

impl Default for FunctionSpec {
    fn default() -> Self {
        Self {
            exec_time: 0.1,
            cold_penalty: 0.5,
            req_per_pod: 40,
            pod_startup: 30.0,
            idle_timeout: 300.0,
            cpu_per_req: 0.025,
            mem_per_pod: 128.0,
        }
    }
}

impl FunctionSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.exec_time.is_finite() && self.exec_time > 0.0) {
            return Err(format!(
                "exec_time must be positive, got {}",
                self.exec_time
            ));
        }
        if !(self.cold_penalty.is_finite() && self.cold_penalty >= 0.0) {
            return Err(format!(
                "cold_penalty must be non-negative, got {}",
                self.cold_penalty
            ));
        }
        if self.req_per_pod == 0 {
            return Err("req_per_pod must be at least 1".into());
        }
        if !(self.pod_startup.is_finite() && self.pod_startup >= 0.0) {
            return Err(format!(
                "pod_startup must be non-negative, got {}",
                self.pod_startup
            ));
        }
        if !(self.idle_timeout.is_finite() && self.idle_timeout > 0.0) {
            return Err(format!(
                "idle_timeout must be positive, got {}",
                self.idle_timeout
            ));
        }
        if !(self.cpu_per_req.is_finite() && self.cpu_per_req >= 0.0) {
            return Err(format!(
                "cpu_per_req must be non-negative, got {}",
                self.cpu_per_req
            ));
        }
        if !(self.mem_per_pod.is_finite() && self.mem_per_pod >= 0.0) {
            return Err(format!(
                "mem_per_pod must be non-negative, got {}",
                self.mem_per_pod
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PodState {
    Starting,
    Ready,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pod {
    pub id: u64,
    pub state: PodState,
    pub ready_at: f64,
}

/// Requests that arrived in the same tick and are still waiting.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Waiting {
    arrived_at: f64,
    count: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cumulative {
    pub pod_seconds: f64,
    pub arrivals: u64,
    pub served: u64,
    pub cold_served: u64,
}

/// One row of the per-tick metrics stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub time: f64,
    pub arrivals: u64,
    pub served: u64,
    pub avg_response: f64,
    pub pods_ready: u32,
    pub pods_starting: u32,
    #[serde(rename = "cpu_util")]
    pub cpu_utilization: f64,
    #[serde(rename = "mem_used")]
    pub memory_used: f64,
    pub cold_hits: u64,
}

impl MetricsRecord {
    pub fn pods(&self) -> u32 {
        self.pods_ready + self.pods_starting
    }
}

/// A group of requests from one arrival tick served in one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServedBatch {
    pub arrived_at: f64,
    pub served_at: f64,
    pub count: u64,
    pub cold: bool,
    /// Per-request response time, seconds.
    pub response: f64,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub record: MetricsRecord,
    pub served: Vec<ServedBatch>,
}

#[derive(Debug, Clone)]
pub struct ClusterState {
    now: f64,
    tick_length: u32,
    pods: Vec<Pod>,
    queue: VecDeque<Waiting>,
    queued: u64,
    last_traffic_at: Option<f64>,
    idle_for: f64,
    reaped: bool,
    idle_reaping: bool,
    next_id: u64,
    cumulative: Cumulative,
}

impl ClusterState {
    /// Empty cluster at time zero.
    pub fn new(tick_length: u32) -> Self {
        assert!(tick_length > 0, "tick length must be positive");
        Self {
            now: 0.0,
            tick_length,
            pods: Vec::new(),
            queue: VecDeque::new(),
            queued: 0,
            last_traffic_at: None,
            idle_for: 0.0,
            reaped: false,
            idle_reaping: true,
            next_id: 0,
            cumulative: Cumulative::default(),
        }
    }

    /// Cluster with `ready` pods already serving.
    pub fn with_ready_pods(tick_length: u32, ready: u32) -> Self {
        let mut state = Self::new(tick_length);
        for _ in 0..ready {
            let id = state.next_pod_id();
            state.pods.push(Pod {
                id,
                state: PodState::Ready,
                ready_at: 0.0,
            });
        }
        state
    }

    /// Turns the platform's scale-to-zero after `idle_timeout` on or off.
    /// On by default; a controller that owns the replica count outright
    /// switches it off.
    pub fn set_idle_reaping(&mut self, enabled: bool) {
        self.idle_reaping = enabled;
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn tick_length(&self) -> u32 {
        self.tick_length
    }

    pub fn pods(&self) -> &[Pod] {
        &self.pods
    }

    pub fn pod_count(&self) -> u32 {
        self.pods.len() as u32
    }

    pub fn ready_count(&self) -> u32 {
        self.pods
            .iter()
            .filter(|p| p.state == PodState::Ready)
            .count() as u32
    }

    pub fn starting_count(&self) -> u32 {
        self.pod_count() - self.ready_count()
    }

    pub fn queued(&self) -> u64 {
        self.queued
    }

    pub fn last_traffic_at(&self) -> Option<f64> {
        self.last_traffic_at
    }

    pub fn cumulative(&self) -> &Cumulative {
        &self.cumulative
    }

    fn next_pod_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Resizes the replica set. New pods start now and become ready after
    /// `pod_startup`; removals take Starting pods first (latest first), then
    /// Ready pods, and are instantaneous.
    pub fn apply_decision(&mut self, desired: u32, spec: &FunctionSpec) {
        let current = self.pod_count();
        if desired > current {
            for _ in current..desired {
                let id = self.next_pod_id();
                self.pods.push(Pod {
                    id,
                    state: PodState::Starting,
                    ready_at: self.now + spec.pod_startup,
                });
            }
        } else if desired < current {
            // Ready pods sort first, Starting pods by ready_at, so truncating
            // drops the latest Starting pods before touching Ready ones.
            self.pods.sort_by(|a, b| {
                let rank = |p: &Pod| (p.state == PodState::Starting) as u8;
                rank(a)
                    .cmp(&rank(b))
                    .then(a.ready_at.total_cmp(&b.ready_at))
                    .then(a.id.cmp(&b.id))
            });
            self.pods.truncate(desired as usize);
        }
    }

    /// Demand over capacity, saturating at 1. `arrivals_rate` is in
    /// requests/second; queued requests count as one tick's worth of demand.
    pub fn utilization(&self, arrivals_rate: f64, spec: &FunctionSpec) -> f64 {
        let demand = arrivals_rate + self.queued as f64 / self.tick_length as f64;
        if demand <= 0.0 {
            return 0.0;
        }
        let capacity = self.ready_count() as f64 * spec.req_per_pod as f64;
        if capacity <= 0.0 {
            return 1.0;
        }
        (demand / capacity).min(1.0)
    }

    pub fn step(&mut self, arrivals: u64, spec: &FunctionSpec) -> MetricsRecord {
        self.step_detailed(arrivals, spec).record
    }

    /// Advances one tick and reports every served batch.
    pub fn step_detailed(&mut self, arrivals: u64, spec: &FunctionSpec) -> StepOutcome {
        let now = self.now;
        let tick = self.tick_length as f64;
        for pod in &mut self.pods {
            if pod.state == PodState::Starting && pod.ready_at <= now {
                pod.state = PodState::Ready;
            }
        }
        let ready = self.ready_count();
        let starting = self.starting_count();
        let cpu_utilization = self.utilization(arrivals as f64 / tick, spec);

        let mut capacity = ready as u64 * spec.req_per_pod as u64 * self.tick_length as u64;
        let mut served = Vec::new();
        while capacity > 0 {
            let Some(front) = self.queue.front_mut() else {
                break;
            };
            let take = front.count.min(capacity);
            served.push(ServedBatch {
                arrived_at: front.arrived_at,
                served_at: now,
                count: take,
                cold: true,
                response: spec.exec_time + (now - front.arrived_at) + spec.cold_penalty,
            });
            front.count -= take;
            capacity -= take;
            self.queued -= take;
            if front.count == 0 {
                self.queue.pop_front();
            }
        }
        let warm = arrivals.min(capacity);
        if warm > 0 {
            served.push(ServedBatch {
                arrived_at: now,
                served_at: now,
                count: warm,
                cold: false,
                response: spec.exec_time,
            });
        }
        let left = arrivals - warm;
        if left > 0 {
            self.queue.push_back(Waiting {
                arrived_at: now,
                count: left,
            });
            self.queued += left;
        }

        let served_total: u64 = served.iter().map(|b| b.count).sum();
        let cold_hits: u64 = served.iter().filter(|b| b.cold).map(|b| b.count).sum();
        // exec_time plus the mean surcharge keeps avg_response >= exec_time exactly.
        let avg_response = if served_total > 0 {
            let surcharge: f64 = served
                .iter()
                .map(|b| b.count as f64 * (b.response - spec.exec_time))
                .sum();
            spec.exec_time + surcharge / served_total as f64
        } else {
            0.0
        };

        let pods = self.pod_count();
        self.cumulative.pod_seconds += pods as f64 * tick;
        self.cumulative.arrivals += arrivals;
        self.cumulative.served += served_total;
        self.cumulative.cold_served += cold_hits;

        if arrivals > 0 {
            self.last_traffic_at = Some(now);
        }
        if arrivals > 0 || self.queued > 0 {
            self.idle_for = 0.0;
            self.reaped = false;
        } else {
            self.idle_for += tick;
            if self.idle_reaping && self.idle_for >= spec.idle_timeout && !self.reaped {
                self.pods.clear();
                self.reaped = true;
            }
        }
        self.now += tick;

        StepOutcome {
            record: MetricsRecord {
                time: now,
                arrivals,
                served: served_total,
                avg_response,
                pods_ready: ready,
                pods_starting: starting,
                cpu_utilization,
                memory_used: pods as f64 * spec.mem_per_pod,
                cold_hits,
            },
            served,
        }
    }
}

pub const METRICS_HEADER: [&str; 9] = [
    "time",
    "arrivals",
    "served",
    "avg_response",
    "pods_ready",
    "pods_starting",
    "cpu_util",
    "mem_used",
    "cold_hits",
];

pub fn write_metrics_csv<W: Write>(records: &[MetricsRecord], writer: W) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a metrics CSV, rejecting any header other than the fixed schema.
pub fn read_metrics_csv<R: Read>(reader: R) -> Result<Vec<MetricsRecord>, csv::Error> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(METRICS_HEADER.iter().copied()) {
        return Err(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!(
                "metrics header must be `{}`, found `{}`",
                METRICS_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        )));
    }
    rdr.deserialize().collect()
}
