use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::cluster::{read_metrics_csv, MetricsRecord};
use crate::{Error, Result};

/// Aggregates of one autoscaler's per-tick metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub ticks: usize,
    pub arrivals: u64,
    pub served: u64,
    /// Served-weighted mean response time, seconds.
    pub mean_response: Option<f64>,
    /// 95th percentile of per-request response time, seconds.
    pub p95_response: Option<f64>,
    pub cold_hits: u64,
    pub pod_seconds: f64,
    pub mean_cpu_utilization: f64,
    /// Busy pod-seconds: `Σ cpu_util · pods_ready · tick`.
    pub cpu_seconds: f64,
    pub peak_memory: f64,
    /// `Σ mem_used · tick`, MB·s.
    pub memory_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub baseline: RunSummary,
    pub candidate: RunSummary,
    /// `(baseline − candidate) / baseline × 100` on pod-seconds; `None`
    /// when the baseline used no pods.
    pub savings_pct: Option<f64>,
    pub forecast_mape: Option<f64>,
    /// Forecast orders used and any fallbacks taken.
    pub forecast_notes: Vec<String>,
}

pub fn summarize(label: &str, records: &[MetricsRecord], tick_length: f64) -> RunSummary {
    let served: u64 = records.iter().map(|r| r.served).sum();
    let weighted: f64 = records
        .iter()
        .map(|r| r.avg_response * r.served as f64)
        .sum();
    let mut responses: Vec<(f64, u64)> = records
        .iter()
        .filter(|r| r.served > 0)
        .map(|r| (r.avg_response, r.served))
        .collect();
    responses.sort_by(|a, b| a.0.total_cmp(&b.0));
    let p95 = weighted_percentile(&responses, 0.95);
    let ticks = records.len();
    RunSummary {
        label: label.to_string(),
        ticks,
        arrivals: records.iter().map(|r| r.arrivals).sum(),
        served,
        mean_response: (served > 0).then(|| weighted / served as f64),
        p95_response: p95,
        cold_hits: records.iter().map(|r| r.cold_hits).sum(),
        pod_seconds: records.iter().map(|r| r.pods() as f64 * tick_length).sum(),
        mean_cpu_utilization: if ticks > 0 {
            records.iter().map(|r| r.cpu_utilization).sum::<f64>() / ticks as f64
        } else {
            0.0
        },
        cpu_seconds: records
            .iter()
            .map(|r| r.cpu_utilization * r.pods_ready as f64 * tick_length)
            .sum(),
        peak_memory: records.iter().map(|r| r.memory_used).fold(0.0, f64::max),
        memory_seconds: records.iter().map(|r| r.memory_used * tick_length).sum(),
    }
}

/// Nearest-rank percentile over `(value, weight)` pairs sorted by value.
fn weighted_percentile(sorted: &[(f64, u64)], q: f64) -> Option<f64> {
    let total: u64 = sorted.iter().map(|&(_, w)| w).sum();
    if total == 0 {
        return None;
    }
    let rank = ((q * total as f64).ceil() as u64).max(1);
    let mut seen = 0;
    for &(value, weight) in sorted {
        seen += weight;
        if seen >= rank {
            return Some(value);
        }
    }
    sorted.last().map(|&(v, _)| v)
}

/// Mean absolute percentage error over positive actuals, in percent.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Option<f64> {
    let terms: Vec<f64> = actual
        .iter()
        .zip(predicted)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, p)| ((a - p) / a).abs())
        .collect();
    (!terms.is_empty()).then(|| 100.0 * terms.iter().sum::<f64>() / terms.len() as f64)
}

/// Tick length implied by record timestamps; they must be evenly spaced.
fn tick_of(records: &[MetricsRecord]) -> Result<f64> {
    let Some(first) = records.first() else {
        return Err(Error::Input("metrics file has no rows".into()));
    };
    let tick = match records.get(1) {
        Some(second) => second.time - first.time,
        None => 1.0,
    };
    if tick.is_nan() || tick <= 0.0 {
        return Err(Error::Input(format!(
            "non-increasing time at {}",
            first.time
        )));
    }
    for (i, r) in records.iter().enumerate() {
        let expected = first.time + i as f64 * tick;
        if (r.time - expected).abs() > 1e-6 * tick {
            return Err(Error::Input(format!(
                "uneven time step at row {}: expected {expected}, found {}",
                i + 1,
                r.time
            )));
        }
    }
    Ok(tick)
}

/// Summarizes two aligned runs, treating `baseline` as the reference for
/// savings.
pub fn compare_records(
    baseline: (&str, &[MetricsRecord]),
    candidate: (&str, &[MetricsRecord]),
) -> Result<ComparisonReport> {
    let tick = tick_of(baseline.1)?;
    let other = tick_of(candidate.1)?;
    if baseline.1.len() != candidate.1.len()
        || tick != other
        || baseline.1[0].time != candidate.1[0].time
    {
        return Err(Error::Input(format!(
            "time ranges differ: {} rows from {} step {tick} vs {} rows from {} step {other}",
            baseline.1.len(),
            baseline.1[0].time,
            candidate.1.len(),
            candidate.1[0].time
        )));
    }
    let baseline = summarize(baseline.0, baseline.1, tick);
    let candidate = summarize(candidate.0, candidate.1, tick);
    let savings_pct = (baseline.pod_seconds > 0.0)
        .then(|| (baseline.pod_seconds - candidate.pod_seconds) / baseline.pod_seconds * 100.0);
    Ok(ComparisonReport {
        baseline,
        candidate,
        savings_pct,
        forecast_mape: None,
        forecast_notes: Vec::new(),
    })
}

fn load_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_metrics_csv(file).map_err(|e| Error::csv(path, e))
}

/// Compares two metrics CSVs, the first acting as the baseline.
pub fn compare(metrics_a: &Path, metrics_b: &Path) -> Result<ComparisonReport> {
    let a = load_metrics(metrics_a)?;
    let b = load_metrics(metrics_b)?;
    let label = |p: &Path| {
        p.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    compare_records((&label(metrics_a), &a), (&label(metrics_b), &b))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| v.to_string())
}

impl ComparisonReport {
    /// `(metric, value)` pairs; `n/a` marks undefined values.
    pub fn rows(&self) -> Vec<(String, String)> {
        let mut rows = Vec::new();
        for (key, s) in [("baseline", &self.baseline), ("candidate", &self.candidate)] {
            let mut push = |name: &str, value: String| rows.push((format!("{key}.{name}"), value));
            push("label", s.label.clone());
            push("ticks", s.ticks.to_string());
            push("arrivals", s.arrivals.to_string());
            push("served", s.served.to_string());
            push("mean_response", opt(s.mean_response));
            push("p95_response", opt(s.p95_response));
            push("cold_hits", s.cold_hits.to_string());
            push("pod_seconds", s.pod_seconds.to_string());
            push("mean_cpu_utilization", s.mean_cpu_utilization.to_string());
            push("cpu_seconds", s.cpu_seconds.to_string());
            push("peak_memory", s.peak_memory.to_string());
            push("memory_seconds", s.memory_seconds.to_string());
        }
        rows.push(("pod_seconds_savings_pct".into(), opt(self.savings_pct)));
        rows.push(("forecast_mape".into(), opt(self.forecast_mape)));
        rows
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["metric", "value"])?;
        for (metric, value) in self.rows() {
            wtr.write_record([metric, value])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let (b, c) = (&self.baseline, &self.candidate);
        let secs = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
        let mut out = String::new();
        let _ = writeln!(out, "{:<24}{:>16}{:>16}", "metric", b.label, c.label);
        let mut line = |name: &str, x: String, y: String| {
            let _ = writeln!(out, "{name:<24}{x:>16}{y:>16}");
        };
        line(
            "requests served",
            b.served.to_string(),
            c.served.to_string(),
        );
        line(
            "mean response (s)",
            secs(b.mean_response),
            secs(c.mean_response),
        );
        line(
            "p95 response (s)",
            secs(b.p95_response),
            secs(c.p95_response),
        );
        line(
            "cold hits",
            b.cold_hits.to_string(),
            c.cold_hits.to_string(),
        );
        line(
            "pod-seconds",
            format!("{:.0}", b.pod_seconds),
            format!("{:.0}", c.pod_seconds),
        );
        line(
            "mean cpu utilization",
            format!("{:.3}", b.mean_cpu_utilization),
            format!("{:.3}", c.mean_cpu_utilization),
        );
        line(
            "cpu-seconds",
            format!("{:.0}", b.cpu_seconds),
            format!("{:.0}", c.cpu_seconds),
        );
        line(
            "peak memory (MB)",
            format!("{:.0}", b.peak_memory),
            format!("{:.0}", c.peak_memory),
        );
        line(
            "memory (MB·s)",
            format!("{:.0}", b.memory_seconds),
            format!("{:.0}", c.memory_seconds),
        );
        let _ = writeln!(
            out,
            "pod-seconds savings: {}",
            self.savings_pct
                .map_or_else(|| "n/a".to_string(), |s| format!("{s:.2}%"))
        );
        if let Some(m) = self.forecast_mape {
            let _ = writeln!(out, "forecast MAPE: {m:.2}%");
        }
        for note in &self.forecast_notes {
            let _ = writeln!(out, "forecast: {note}");
        }
        out
    }
}

/// Reads a `metric,value` report CSV back into pairs.
pub fn read_report_csv<R: Read>(
    reader: R,
) -> std::result::Result<Vec<(String, String)>, csv::Error> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(time: f64, pods: u32, served: u64, response: f64) -> MetricsRecord {
        MetricsRecord {
            time,
            arrivals: served,
            served,
            avg_response: if served > 0 { response } else { 0.0 },
            pods_ready: pods,
            pods_starting: 0,
            cpu_utilization: 0.5,
            memory_used: pods as f64 * 128.0,
            cold_hits: 0,
        }
    }

    #[test]
    fn self_comparison_saves_nothing() {
        let r: Vec<_> = (0..10).map(|t| record(t as f64, 2, 5, 0.1)).collect();
        let report = compare_records(("a", &r), ("a", &r)).unwrap();
        assert_eq!(report.savings_pct, Some(0.0));
        assert_eq!(report.baseline, report.candidate);
    }

    #[test]
    fn half_the_pods_saves_half() {
        let a: Vec<_> = (0..10)
            .map(|t| record(t as f64, 2 * (t % 3 + 1), 5, 0.1))
            .collect();
        let b: Vec<_> = (0..10)
            .map(|t| record(t as f64, t % 3 + 1, 5, 0.1))
            .collect();
        let report = compare_records(("a", &a), ("b", &b)).unwrap();
        assert_eq!(report.savings_pct, Some(50.0));
    }

    #[test]
    fn zero_baseline_is_undefined() {
        let r: Vec<_> = (0..5).map(|t| record(t as f64, 0, 0, 0.0)).collect();
        let report = compare_records(("a", &r), ("b", &r)).unwrap();
        assert_eq!(report.savings_pct, None);
        assert!(report.to_text().contains("savings: n/a"));
        assert!(report
            .rows()
            .contains(&("pod_seconds_savings_pct".to_string(), "n/a".to_string())));
    }

    #[test]
    fn misaligned_ranges_rejected() {
        let a: Vec<_> = (0..5).map(|t| record(t as f64, 1, 1, 0.1)).collect();
        let b: Vec<_> = (1..6).map(|t| record(t as f64, 1, 1, 0.1)).collect();
        assert!(matches!(
            compare_records(("a", &a), ("b", &b)),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            compare_records(("a", &a), ("b", &a[..4])),
            Err(Error::Input(_))
        ));
        let mut uneven = a.clone();
        uneven[3].time = 3.5;
        assert!(matches!(
            compare_records(("a", &uneven), ("b", &uneven)),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn response_statistics() {
        // 90 requests at 0.1 s, 10 at 2.0 s: mean 0.29, p95 2.0.
        let r = vec![record(0.0, 1, 90, 0.1), record(1.0, 1, 10, 2.0)];
        let s = summarize("x", &r, 1.0);
        assert!((s.mean_response.unwrap() - 0.29).abs() < 1e-12);
        assert_eq!(s.p95_response, Some(2.0));
        let r = vec![record(0.0, 1, 95, 0.1), record(1.0, 1, 5, 2.0)];
        assert_eq!(summarize("x", &r, 1.0).p95_response, Some(0.1));
    }

    #[test]
    fn resource_integrals() {
        let r = vec![record(0.0, 2, 1, 0.1), record(5.0, 4, 1, 0.1)];
        let s = summarize("x", &r, 5.0);
        assert_eq!(s.pod_seconds, 30.0);
        assert_eq!(s.cpu_seconds, 0.5 * 2.0 * 5.0 + 0.5 * 4.0 * 5.0);
        assert_eq!(s.peak_memory, 512.0);
        assert_eq!(s.memory_seconds, 128.0 * 6.0 * 5.0);
    }

    #[test]
    fn mape_skips_zero_actuals() {
        assert_eq!(mape(&[0.0, 10.0, 20.0], &[5.0, 11.0, 18.0]), Some(10.0));
        assert_eq!(mape(&[0.0, 0.0], &[1.0, 2.0]), None);
        assert_eq!(mape(&[4.0], &[4.0]), Some(0.0));
    }

    #[test]
    fn report_csv_round_trip() {
        let a: Vec<_> = (0..10)
            .map(|t| record(t as f64, 3, 7, 0.123456789))
            .collect();
        let b: Vec<_> = (0..10).map(|t| record(t as f64, 2, 7, 0.1)).collect();
        let report = compare_records(("a", &a), ("b", &b)).unwrap();
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert_eq!(read_report_csv(buf.as_slice()).unwrap(), report.rows());
    }
}
