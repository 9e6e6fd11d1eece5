//! `features`: extract the catalog feature vector for every series.

use std::path::Path;

use rayon::prelude::*;

use featurecast::{features, io, Error, FeatureTable};

use crate::config::PipelineConfig;
use crate::failure::Failure;
use crate::records::FailureRecord;
use crate::util;

type CmdResult = std::result::Result<(), Failure>;

pub fn run(cfg: &PipelineConfig, data: &Path, out: &Path) -> CmdResult {
    cfg.validate()?;
    util::ensure_out_dir(out)?;
    cfg.echo(out)?;

    let series = io::read_series_csv(data)?;
    if series.is_empty() {
        return Err(Failure::validation("invalid-parameter", "dataset holds no series"));
    }

    let results: Vec<_> = series
        .par_iter()
        .map(|s| {
            features::extract(s)
                .map(|fv| (s.id().to_string(), fv))
                .map_err(|e| FailureRecord::new(s.id(), "features", e))
        })
        .collect();
    let (rows, failures) = util::partition(results);
    util::write_failures(out, &failures)?;
    if rows.is_empty() {
        return Err(Failure::validation(
            "too-few-series",
            "no series yielded a feature vector; see failures.json",
        ));
    }

    let table = FeatureTable::from_rows(rows)?;
    let file = std::fs::File::create(out.join("features.csv")).map_err(Error::from)?;
    table.write_csv(file)?;

    println!(
        "extracted features for {} series ({} failed)",
        table.series_ids().len(),
        failures.len()
    );
    Ok(())
}
