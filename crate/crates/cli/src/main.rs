use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use coldstart_core::autoscale::ForecasterConfig;
use coldstart_core::scenario::{self, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "coldstart",
    version,
    about = "Predictive vs reactive autoscaling simulator"
)]
struct Cli {
    /// Scenario config (TOML); defaults describe the reference scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the hourly workload trace as trace.csv.
    Generate,
    /// Forecast the evaluation days and write predicted_vs_actual.csv.
    Forecast,
    /// Run HPA and PBA on the same arrivals and write metrics and report.
    Run {
        /// Requests per second one pod serves, as assumed by PBA.
        req_per_pod: Option<u32>,
        /// Seconds the first re-scale fires before the end of the first interval.
        initial_delay: Option<f64>,
        /// Seconds per PBA interval.
        interval: Option<f64>,
    },
    /// Compare two metrics CSVs; the first is the baseline.
    Compare {
        baseline: PathBuf,
        candidate: PathBuf,
    },
    /// Write per-figure CSVs for a completed run directory.
    PlotData { run_dir: PathBuf },
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut config = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.scenario.seed = Some(seed);
    }
    if let Some(out) = &cli.out {
        config.scenario.output_dir = out.clone();
    }
    Ok(config)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn execute(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate => {
            let config = load_config(&cli)?;
            config.validate()?;
            let trace = scenario::load_trace(&config)?;
            let dir = &config.scenario.output_dir;
            ensure_dir(dir)?;
            let path = dir.join("trace.csv");
            let file = std::fs::File::create(&path)
                .with_context(|| format!("creating {}", path.display()))?;
            trace.write_csv(file)?;
            println!("wrote {} ({} hours)", path.display(), trace.hourly().len());
        }
        Command::Forecast => {
            let config = load_config(&cli)?;
            config.validate()?;
            let trace = scenario::load_trace(&config)?;
            let forecaster = ForecasterConfig {
                period: config.scenario.period,
                order: config.pba.pinned_order(),
            };
            let s = &config.scenario;
            let result = scenario::forecast_eval(&trace, s.train_days, s.eval_days, &forecaster)?;
            ensure_dir(&s.output_dir)?;
            let path = s.output_dir.join("predicted_vs_actual.csv");
            let file = std::fs::File::create(&path)
                .with_context(|| format!("creating {}", path.display()))?;
            result.write_csv(file)?;
            for note in &result.notes {
                println!("{note}");
            }
            match result.mape {
                Some(m) => println!("MAPE {m:.2}%"),
                None => println!("MAPE n/a"),
            }
            println!("wrote {}", path.display());
        }
        Command::Run {
            req_per_pod,
            initial_delay,
            interval,
        } => {
            let mut config = load_config(&cli)?;
            if let Some(v) = req_per_pod {
                config.pba.req_per_pod = *v;
            }
            if let Some(v) = initial_delay {
                config.pba.initial_delay = *v;
            }
            if let Some(v) = interval {
                config.pba.interval = *v;
            }
            let outcome = scenario::run_scenario(&config)?;
            print!("{}", outcome.report.to_text());
            println!("wrote {}", outcome.output_dir.display());
        }
        Command::Compare {
            baseline,
            candidate,
        } => {
            let report = scenario::compare(baseline, candidate)?;
            print!("{}", report.to_text());
            if let Some(dir) = &cli.out {
                ensure_dir(dir)?;
                let path = dir.join("report.csv");
                let file = std::fs::File::create(&path)
                    .with_context(|| format!("creating {}", path.display()))?;
                report.write_csv(file)?;
            }
        }
        Command::PlotData { run_dir } => {
            for path in scenario::emit_plot_data(run_dir)? {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("coldstart: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
