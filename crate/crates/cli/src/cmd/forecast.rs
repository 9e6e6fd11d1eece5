//! `forecast`: apply a persisted meta-model to new series.
//!
//! The model file is self-describing (horizon, interval level, roster and
//! feature source ride inside it), so the dataset is the only other input.

use std::path::Path;

use rayon::prelude::*;

use featurecast::series::TimeSeries;
use featurecast::{io, metalearn, pool, Error, MetaModel};

use crate::config::PipelineConfig;
use crate::failure::Failure;
use crate::records::{self, FailureRecord, ForecastRecord};
use crate::util;

type CmdResult = std::result::Result<(), Failure>;

pub fn run(cfg: &PipelineConfig, model_path: &Path, data: &Path, out: &Path) -> CmdResult {
    cfg.validate()?;
    util::ensure_out_dir(out)?;
    cfg.echo(out)?;

    let file = std::fs::File::open(model_path).map_err(Error::from)?;
    let model = metalearn::load_model(std::io::BufReader::new(file))?;
    let roster = pool::parse_roster(&model.roster)?;

    let series = io::read_series_csv(data)?;
    let results: Vec<_> = series
        .par_iter()
        .map(|s| {
            forecast_one(&model, &roster, s)
                .map_err(|e| FailureRecord::new(s.id(), "forecast", e))
        })
        .collect();
    let (records, failures) = util::partition(results);

    let file = std::fs::File::create(out.join("forecasts.jsonl")).map_err(Error::from)?;
    records::write_forecasts(std::io::BufWriter::new(file), &records)?;
    util::write_failures(out, &failures)?;

    println!("forecast {} series ({} failed)", records.len(), failures.len());
    Ok(())
}

fn forecast_one(
    model: &MetaModel,
    roster: &[pool::Method],
    s: &TimeSeries,
) -> featurecast::Result<ForecastRecord> {
    let bundle = pool::forecast_all(s, model.horizon, model.alpha, roster)?;
    let features = metalearn::features_for(s, &bundle, model.feature_source)?;
    let weights = metalearn::predict_weights(model, &features)?;
    let combined = metalearn::combine(&bundle, &weights)?;
    Ok(ForecastRecord {
        series_id: s.id().to_string(),
        horizon: model.horizon,
        alpha: model.alpha,
        methods: bundle.methods.clone(),
        weights,
        points: combined.points,
        lower: combined.lower,
        upper: combined.upper,
        method_points: bundle.points,
        substituted: bundle.substituted,
    })
}
