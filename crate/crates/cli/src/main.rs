//! `featurecast` — seeded batch pipeline for feature-based forecast
//! selection and combination.
//!
//! Five subcommands cover the full loop: `generate` a synthetic dataset,
//! `features` to inspect it, `train` a meta-model, `forecast` new series and
//! `evaluate` the results. Every command takes `--config`, `--seed`,
//! `--workers` and `--out`; flags override config keys, the effective config
//! is echoed into the output directory, and a fixed seed makes the whole
//! pipeline byte-reproducible. Failures exit 1 (validation) or 2 (runtime)
//! with a single JSON object on stderr.

mod cmd;
mod config;
mod failure;
mod records;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, PipelineConfig};
use failure::Failure;

#[derive(Parser)]
#[command(name = "featurecast", version, about = "Feature-based forecast combination pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a synthetic dataset (optionally matched to a feature target).
    Generate(GenerateArgs),
    /// Extract the feature catalog for every series in a dataset.
    Features(FeaturesArgs),
    /// Fit a meta-model mapping features to pool weights.
    Train(TrainArgs),
    /// Apply a trained model to new series.
    Forecast(ForecastArgs),
    /// Score a forecast file against realized series.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; omitted keys take defaults.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Master seed (overrides the config key).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores (overrides the config key).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory, created if absent.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// JSON object of {feature-name: value} to match via genetic search.
    #[arg(long, value_name = "FILE")]
    ga_target: Option<PathBuf>,
    /// Series count (overrides the config key).
    #[arg(long)]
    count: Option<usize>,
    /// Seasonal period (overrides the config key).
    #[arg(long)]
    period: Option<usize>,
    /// Forecast horizon the lengths must accommodate (overrides the config key).
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Series CSV (`series_id,period,index,value`).
    data: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct TrainArgs {
    /// Series CSV; the last `horizon` points of each series form the
    /// validation window.
    data: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
    /// Forecast horizon (overrides the config key).
    #[arg(long)]
    horizon: Option<usize>,
    /// Comma-separated method roster (overrides the config key).
    #[arg(long, value_delimiter = ',', value_name = "METHODS")]
    roster: Option<Vec<String>>,
    /// Enable or disable pool trimming (overrides the config key).
    #[arg(long, value_name = "BOOL")]
    trim: Option<bool>,
}

#[derive(Args)]
struct ForecastArgs {
    /// Model JSON produced by `train`.
    model: PathBuf,
    /// Series CSV of histories to forecast beyond.
    data: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Forecast JSONL produced by `forecast`.
    forecasts: PathBuf,
    /// Series CSV holding history plus the realized horizon window.
    actuals: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let f = Failure::validation("usage", e.to_string());
            eprintln!("{}", f.to_json());
            return ExitCode::from(f.code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate(a) => {
            let over = Overrides {
                seed: a.common.seed,
                workers: a.common.workers,
                horizon: a.horizon,
                count: a.count,
                period: a.period,
                ..Overrides::default()
            };
            let cfg = PipelineConfig::effective(a.common.config.as_deref(), &over)?;
            init_workers(cfg.workers)?;
            cmd::generate::run(&cfg, a.ga_target.as_deref(), &a.common.out)
        }
        Command::Features(a) => {
            let over = Overrides {
                seed: a.common.seed,
                workers: a.common.workers,
                ..Overrides::default()
            };
            let cfg = PipelineConfig::effective(a.common.config.as_deref(), &over)?;
            init_workers(cfg.workers)?;
            cmd::features::run(&cfg, &a.data, &a.common.out)
        }
        Command::Train(a) => {
            let over = Overrides {
                seed: a.common.seed,
                workers: a.common.workers,
                horizon: a.horizon,
                roster: a.roster,
                trim: a.trim,
                ..Overrides::default()
            };
            let cfg = PipelineConfig::effective(a.common.config.as_deref(), &over)?;
            init_workers(cfg.workers)?;
            cmd::train::run(&cfg, &a.data, &a.common.out)
        }
        Command::Forecast(a) => {
            let over = Overrides {
                seed: a.common.seed,
                workers: a.common.workers,
                ..Overrides::default()
            };
            let cfg = PipelineConfig::effective(a.common.config.as_deref(), &over)?;
            init_workers(cfg.workers)?;
            cmd::forecast::run(&cfg, &a.model, &a.data, &a.common.out)
        }
        Command::Evaluate(a) => {
            let over = Overrides {
                seed: a.common.seed,
                workers: a.common.workers,
                ..Overrides::default()
            };
            let cfg = PipelineConfig::effective(a.common.config.as_deref(), &over)?;
            init_workers(cfg.workers)?;
            cmd::evaluate::run(&cfg, &a.forecasts, &a.actuals, &a.common.out)
        }
    }
}

/// Caps the worker pool; results are identical for any worker count because
/// every output is collected in input order.
fn init_workers(workers: usize) -> Result<(), Failure> {
    if workers == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| Failure::runtime("thread-pool", e.to_string()))
}
