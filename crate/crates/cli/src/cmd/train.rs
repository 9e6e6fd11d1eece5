//! `train`: fit the meta-model on a dataset, optionally trimming the pool
//! first, and persist everything needed to audit or reuse the run.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use featurecast::pool::{ForecastBundle, Method};
use featurecast::rng::RngStream;
use featurecast::series::Dataset;
use featurecast::trimming::{self, TrimResult};
use featurecast::{io, metalearn, pool, series, Error};

use crate::config::PipelineConfig;
use crate::failure::Failure;
use crate::records::FailureRecord;
use crate::util;

type CmdResult = std::result::Result<(), Failure>;

/// `trim.json` contents; `result` is absent when trimming was disabled.
#[derive(Debug, Serialize)]
struct TrimReport {
    enabled: bool,
    kept: Vec<String>,
    result: Option<TrimResult>,
}

/// `report.json` contents.
#[derive(Debug, Serialize)]
struct TrainReport<'a> {
    series_total: usize,
    series_used: usize,
    loss: &'a str,
    horizon: usize,
    mode: metalearn::Mode,
    tau: f64,
    kept_roster: &'a [String],
    objective: Objectives,
}

/// Mean weighted validation loss under three weighting rules; the oracle
/// row lower-bounds both others.
#[derive(Debug, Clone, Copy, Serialize)]
struct Objectives {
    trained: f64,
    uniform: f64,
    oracle: f64,
}

pub fn run(cfg: &PipelineConfig, data: &Path, out: &Path) -> CmdResult {
    cfg.validate()?;
    util::ensure_out_dir(out)?;
    cfg.echo(out)?;

    let roster = cfg.roster_methods()?;
    let all = io::read_series_csv(data)?;
    let total = all.len();
    let dataset = Dataset::new(all, cfg.horizon)?;
    let rng = RngStream::new(cfg.seed, 0);

    let mut failures: Vec<FailureRecord> = Vec::new();
    let (kept, trim_report) = if cfg.trim.enabled {
        trim_pool(cfg, &dataset, &roster, &mut failures)?
    } else {
        let names: Vec<String> = roster.iter().map(|m| m.name().to_string()).collect();
        (roster.clone(), TrimReport { enabled: false, kept: names, result: None })
    };
    util::write_json(&out.join("trim.json"), &trim_report)?;

    let (table, dropped) = metalearn::build_training_table(
        &dataset,
        &kept,
        cfg.loss,
        cfg.feature_source,
        cfg.alpha,
    )?;
    failures.extend(dropped.iter().map(|(id, why)| FailureRecord::new(id, "train", why)));
    util::write_failures(out, &failures)?;

    let model = metalearn::fit(&table, &cfg.metalearn.to_params(), &rng.derive(1))?;
    let file = std::fs::File::create(out.join("model.json")).map_err(Error::from)?;
    metalearn::save_model(file, &model)?;

    let objective = Objectives {
        trained: metalearn::objective(&table, &model)?,
        uniform: metalearn::uniform_objective(&table)?,
        oracle: metalearn::oracle_objective(&table)?,
    };
    util::write_json(
        &out.join("report.json"),
        &TrainReport {
            series_total: total,
            series_used: table.rows.len(),
            loss: cfg.loss.name(),
            horizon: cfg.horizon,
            mode: model.mode,
            tau: model.tau,
            kept_roster: &trim_report.kept,
            objective,
        },
    )?;

    println!(
        "trained on {}/{} series; {} objective: trained {:.6}, uniform {:.6}, oracle {:.6}",
        table.rows.len(),
        total,
        cfg.loss.name(),
        objective.trained,
        objective.uniform,
        objective.oracle
    );
    Ok(())
}

/// Runs the robustness-and-diversity trim on the validation windows and
/// maps the surviving names back to methods.
fn trim_pool(
    cfg: &PipelineConfig,
    dataset: &Dataset,
    roster: &[Method],
    failures: &mut Vec<FailureRecord>,
) -> std::result::Result<(Vec<Method>, TrimReport), Failure> {
    let horizon = dataset.horizon();
    let results: Vec<_> = dataset
        .series()
        .par_iter()
        .map(|s| {
            let build = || -> featurecast::Result<(ForecastBundle, Vec<f64>)> {
                let split = series::split(s, horizon)?;
                let bundle = pool::forecast_all(&split.train, horizon, cfg.alpha, roster)?;
                Ok((bundle, split.validation))
            };
            build().map_err(|e| FailureRecord::new(s.id(), "trim", e))
        })
        .collect();
    let (pairs, failed) = util::partition(results);
    failures.extend(failed);
    if pairs.is_empty() {
        return Err(Failure::validation(
            "too-few-series",
            "no series usable for pool trimming; see failures.json",
        ));
    }

    let bundles: Vec<&ForecastBundle> = pairs.iter().map(|(b, _)| b).collect();
    let actuals: Vec<&[f64]> = pairs.iter().map(|(_, a)| a.as_slice()).collect();
    let result = trimming::rad(&bundles, &actuals, &cfg.trim.to_core())?;

    let kept: Vec<Method> =
        result.kept.iter().map(|n| Method::parse(n)).collect::<featurecast::Result<_>>()?;
    let report = TrimReport { enabled: true, kept: result.kept.clone(), result: Some(result) };
    Ok((kept, report))
}
