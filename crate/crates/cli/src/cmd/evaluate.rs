//! `evaluate`: score a forecast file against realized series.
//!
//! The actuals file holds full series — history plus the final `horizon`
//! observations — because the scaled losses need the history for their
//! denominators. Records and actuals join strictly on `series_id`.

use std::collections::BTreeMap;
use std::path::Path;

use featurecast::metrics::{DecompositionRow, EvalReport, EvalRow};
use featurecast::series::TimeSeries;
use featurecast::{io, metrics, Error};

use crate::config::PipelineConfig;
use crate::failure::Failure;
use crate::records::{self, ForecastRecord};
use crate::util;

type CmdResult = std::result::Result<(), Failure>;

pub fn run(cfg: &PipelineConfig, forecasts: &Path, actuals: &Path, out: &Path) -> CmdResult {
    cfg.validate()?;
    util::ensure_out_dir(out)?;
    cfg.echo(out)?;

    let records = records::read_forecasts_path(forecasts)?;
    let series = io::read_series_csv(actuals)?;
    let by_id: BTreeMap<&str, &TimeSeries> =
        series.iter().map(|s| (s.id(), s)).collect();

    // strict two-way join
    let mut unmatched: Vec<String> = records
        .iter()
        .filter(|r| !by_id.contains_key(r.series_id.as_str()))
        .map(|r| r.series_id.clone())
        .collect();
    let forecast_ids: std::collections::BTreeSet<&str> =
        records.iter().map(|r| r.series_id.as_str()).collect();
    unmatched.extend(
        series
            .iter()
            .filter(|s| !forecast_ids.contains(s.id()))
            .map(|s| s.id().to_string()),
    );
    if !unmatched.is_empty() {
        return Err(Error::JoinMismatch { ids: unmatched }.into());
    }

    let mut report = EvalReport::default();
    for rec in &records {
        let s = by_id[rec.series_id.as_str()];
        if let Err(e) = eval_one(rec, s, &mut report) {
            report.skipped.push((rec.series_id.clone(), e.to_string()));
        }
    }

    let file = std::fs::File::create(out.join("evaluation.csv")).map_err(Error::from)?;
    report.write_csv(file)?;
    util::write_json(&out.join("decomposition.json"), &report.decompositions)?;
    let mut summary = report.summary_json()?;
    summary.push('\n');
    std::fs::write(out.join("summary.json"), summary).map_err(Error::from)?;

    for (method, loss, mean) in report.aggregates() {
        println!("{method} {loss} mean {mean:.6}");
    }
    println!(
        "evaluated {} series ({} skipped)",
        records.len() - report.skipped.len(),
        report.skipped.len()
    );
    Ok(())
}

/// Scores one record; pushes rows only after every loss is computable so a
/// skipped series never leaves partial rows behind.
fn eval_one(
    rec: &ForecastRecord,
    full: &TimeSeries,
    report: &mut EvalReport,
) -> featurecast::Result<()> {
    rec.validate()?;
    let h = rec.horizon;
    if full.len() <= h {
        return Err(Error::SeriesTooShort {
            id: rec.series_id.clone(),
            needed: h + 1,
            got: full.len(),
        });
    }
    let split_at = full.len() - h;
    let history =
        TimeSeries::new(full.id(), full.period(), full.values()[..split_at].to_vec())?;
    let window = &full.values()[split_at..];

    let losses = [
        ("rmsse", metrics::rmsse(window, &rec.points, &history)?),
        ("smape", metrics::smape(window, &rec.points)?),
        ("mase", metrics::mase(window, &rec.points, &history)?),
        (
            "msis",
            metrics::msis(window, &rec.lower, &rec.upper, &history, rec.alpha, full.period())?,
        ),
    ];
    let decomposition = if rec.method_points.is_empty() {
        None
    } else {
        let d = metrics::mse_decomposition(&rec.method_points, &rec.weights, window)?;
        Some(DecompositionRow {
            series_id: rec.series_id.clone(),
            combined: d.combined,
            weighted: d.weighted,
            diversity: d.diversity,
            residual: d.residual(),
        })
    };

    for (loss, value) in losses {
        report.rows.push(EvalRow {
            series_id: rec.series_id.clone(),
            method: "combined".into(),
            loss: loss.into(),
            value,
        });
    }
    report.decompositions.extend(decomposition);
    for m in &rec.substituted {
        report.substitutions.push((rec.series_id.clone(), m.clone()));
    }
    Ok(())
}
