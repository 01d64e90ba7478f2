use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::report::{compare_records, mape, ComparisonReport};
use super::ConfigError;
use crate::autoscale::{
    interval_predictions, pba_pipeline, simulate, write_decisions_csv, ForecasterConfig,
    HpaController, PbaController, SimulationRun,
};
use crate::cluster::{read_metrics_csv, write_metrics_csv, MetricsRecord};
use crate::forecast::TimeSeries;
use crate::workload::{
    expand_arrivals, generate_trace, WorkloadSpec, WorkloadTrace, HOURS_PER_DAY, SECONDS_PER_HOUR,
};
use crate::{Error, Result};

/// Figure data written by [`emit_plot_data`], relative to the run directory.
pub const PLOT_FILES: [&str; 5] = [
    "plots/predicted_vs_actual.csv",
    "plots/response_time.csv",
    "plots/pod_counts.csv",
    "plots/cpu.csv",
    "plots/memory.csv",
];

/// Day-ahead forecasts over the evaluation days, each refit on every hour
/// observed before it.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalForecast {
    /// First trace hour covered.
    pub start_hour: usize,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
    pub mape: Option<f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictionRow {
    hour: usize,
    actual: f64,
    predicted: f64,
}

impl EvalForecast {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(writer);
        for (i, (&actual, &predicted)) in self.actual.iter().zip(&self.predicted).enumerate() {
            wtr.serialize(PredictionRow {
                hour: self.start_hour + i,
                actual,
                predicted,
            })?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn forecast_eval(
    trace: &WorkloadTrace,
    train_days: usize,
    eval_days: usize,
    forecaster: &ForecasterConfig,
) -> Result<EvalForecast> {
    if train_days + eval_days > trace.days() {
        return Err(ConfigError::invalid(
            "scenario.eval_days",
            format!(
                "train_days + eval_days = {} exceeds the {}-day trace",
                train_days + eval_days,
                trace.days()
            ),
        )
        .into());
    }
    let start_hour = train_days * HOURS_PER_DAY;
    let end_hour = (train_days + eval_days) * HOURS_PER_DAY;
    let mut predicted = Vec::with_capacity(end_hour - start_hour);
    let mut notes = Vec::new();
    for day in train_days..train_days + eval_days {
        let history = TimeSeries::hourly(trace.hourly()[..day * HOURS_PER_DAY].to_vec())?;
        let out = pba_pipeline(&history, HOURS_PER_DAY, forecaster)?;
        match (&out.order, &out.fallback) {
            (_, Some(reason)) => {
                notes.push(format!("day {day}: seasonal-naive fallback ({reason})"))
            }
            (Some(order), None) => notes.push(format!("day {day}: SARIMA{order}")),
            (None, None) => {}
        }
        predicted.extend(out.predictions);
    }
    let actual = trace.hourly()[start_hour..end_hour].to_vec();
    Ok(EvalForecast {
        start_hour,
        mape: mape(&actual, &predicted),
        actual,
        predicted,
        notes,
    })
}

/// The scenario's trace: the configured file, or a generated one using the
/// scenario seed.
pub fn load_trace(config: &ScenarioConfig) -> Result<WorkloadTrace> {
    match &config.scenario.trace_file {
        Some(path) => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            WorkloadTrace::read_csv(file).map_err(|e| Error::csv(path, e))
        }
        None => Ok(generate_trace(&WorkloadSpec {
            seed: config.seed(),
            ..config.workload.clone()
        })?),
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub report: ComparisonReport,
    pub forecast: EvalForecast,
    pub hpa: SimulationRun,
    pub pba: SimulationRun,
    pub output_dir: PathBuf,
}

/// Forecasts the evaluation days, replays them under both autoscalers on
/// one shared arrival stream and writes every artifact to the output
/// directory.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    config.validate()?;
    let s = &config.scenario;
    let trace = load_trace(config)?;
    let forecaster = ForecasterConfig {
        period: s.period,
        order: config.pba.pinned_order(),
    };
    let forecast = forecast_eval(&trace, s.train_days, s.eval_days, &forecaster)?;
    let eval_trace = trace.days_range(s.train_days, s.train_days + s.eval_days)?;
    let arrivals = expand_arrivals(&eval_trace, s.tick_length, s.arrivals, config.seed())?;
    let predictions = interval_predictions(
        &forecast.predicted,
        SECONDS_PER_HOUR as f64,
        config.pba.interval,
    );

    let (hpa, pba) = std::thread::scope(|scope| {
        let hpa = scope.spawn(|| {
            simulate(
                &arrivals,
                &config.function,
                &mut HpaController::new(config.hpa.clone()),
            )
        });
        let pba = simulate(
            &arrivals,
            &config.function,
            &mut PbaController::new(config.pba.clone(), predictions),
        );
        (hpa.join().expect("HPA simulation panicked"), pba)
    });

    let mut report = compare_records(("HPA", &hpa.records), ("PBA", &pba.records))?;
    report.forecast_mape = forecast.mape;
    report.forecast_notes = forecast.notes.clone();

    let dir = &s.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_with(&dir.join("metrics_hpa.csv"), |w| {
        write_metrics_csv(&hpa.records, w)
    })?;
    write_with(&dir.join("metrics_pba.csv"), |w| {
        write_metrics_csv(&pba.records, w)
    })?;
    let mut decisions: Vec<_> = hpa
        .decisions
        .iter()
        .chain(&pba.decisions)
        .cloned()
        .collect();
    decisions.sort_by(|a, b| a.time.total_cmp(&b.time));
    write_with(&dir.join("decisions.csv"), |w| {
        write_decisions_csv(&decisions, w)
    })?;
    write_with(&dir.join("predicted_vs_actual.csv"), |w| {
        forecast.write_csv(w)
    })?;
    write_with(&dir.join("report.csv"), |w| report.write_csv(w))?;
    let text_path = dir.join("report.txt");
    std::fs::write(&text_path, report.to_text()).map_err(|e| Error::io(&text_path, e))?;

    Ok(ScenarioOutcome {
        report,
        forecast,
        hpa,
        pba,
        output_dir: dir.clone(),
    })
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(BufWriter<File>) -> std::result::Result<(), csv::Error>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    f(BufWriter::new(file)).map_err(|e| Error::csv(path, e))
}

fn open_input(dir: &Path, name: &str) -> Result<File> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(Error::Input(format!("{} is missing", path.display())));
    }
    File::open(&path).map_err(|e| Error::io(&path, e))
}

fn write_pair<F>(path: &Path, hpa: &[MetricsRecord], pba: &[MetricsRecord], value: F) -> Result<()>
where
    F: Fn(&MetricsRecord) -> f64,
{
    write_with(path, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["time", "hpa", "pba"])?;
        for (a, b) in hpa.iter().zip(pba) {
            wtr.serialize((a.time, value(a), value(b)))?;
        }
        wtr.flush()?;
        Ok(())
    })
}

/// Writes one CSV per comparison figure under `<run_dir>/plots`.
pub fn emit_plot_data(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let load = |name: &str| -> Result<Vec<MetricsRecord>> {
        read_metrics_csv(open_input(run_dir, name)?).map_err(|e| Error::csv(run_dir.join(name), e))
    };
    let hpa = load("metrics_hpa.csv")?;
    let pba = load("metrics_pba.csv")?;
    if hpa.len() != pba.len() {
        return Err(Error::Input(format!(
            "metrics files differ in length: {} vs {}",
            hpa.len(),
            pba.len()
        )));
    }
    let rows: Vec<PredictionRow> =
        csv::Reader::from_reader(open_input(run_dir, "predicted_vs_actual.csv")?)
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::csv(run_dir.join("predicted_vs_actual.csv"), e))?;

    let plots = run_dir.join("plots");
    std::fs::create_dir_all(&plots).map_err(|e| Error::io(&plots, e))?;
    let paths: Vec<PathBuf> = PLOT_FILES.iter().map(|f| run_dir.join(f)).collect();
    write_with(&paths[0], |w| {
        let mut wtr = csv::Writer::from_writer(w);
        for row in &rows {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    })?;
    write_pair(&paths[1], &hpa, &pba, |r| r.avg_response)?;
    write_pair(&paths[2], &hpa, &pba, |r| r.pods() as f64)?;
    write_pair(&paths[3], &hpa, &pba, |r| r.cpu_utilization)?;
    write_pair(&paths[4], &hpa, &pba, |r| r.memory_used)?;
    Ok(paths)
}
