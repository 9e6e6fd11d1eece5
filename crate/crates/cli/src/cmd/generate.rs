//! `generate`: simulate a seeded synthetic dataset, optionally steered
//! toward a feature target by the genetic search.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use featurecast::generator::{self, ga, MarSpec};
use featurecast::rng::RngStream;
use featurecast::series::TimeSeries;
use featurecast::{io, Error, FeatureVector};

use crate::config::PipelineConfig;
use crate::failure::Failure;
use crate::util;

type CmdResult = std::result::Result<(), Failure>;

/// Everything needed to audit a target-matched generation run.
#[derive(Debug, Serialize)]
struct GaResultFile<'a> {
    target: &'a BTreeMap<String, f64>,
    tolerance: f64,
    distance: f64,
    converged: bool,
    /// Best distance after initialization and after each generation.
    best_history: &'a [f64],
    spec: &'a MarSpec,
}

pub fn run(cfg: &PipelineConfig, ga_target: Option<&Path>, out: &Path) -> CmdResult {
    cfg.validate()?;
    util::ensure_out_dir(out)?;
    cfg.echo(out)?;

    let rng = RngStream::new(cfg.seed, 0);
    match ga_target {
        None => {
            let g = &cfg.generator;
            let dataset = generator::generate_dataset(
                g.count,
                (g.length_min, g.length_max),
                g.period,
                g.components,
                cfg.horizon,
                &rng,
            )?;
            io::write_series_csv(out.join("series.csv"), dataset.series())?;
            println!("generated {} series (seed {})", dataset.len(), cfg.seed);
            Ok(())
        }
        Some(target_path) => run_matched(cfg, target_path, out, &rng),
    }
}

fn run_matched(
    cfg: &PipelineConfig,
    target_path: &Path,
    out: &Path,
    rng: &RngStream,
) -> CmdResult {
    let g = &cfg.generator;
    let raw = std::fs::read_to_string(target_path).map_err(Error::from)?;
    let target_map: BTreeMap<String, f64> = serde_json::from_str(&raw).map_err(Error::from)?;
    if target_map.is_empty() {
        return Err(Failure::validation("invalid-parameter", "ga target object is empty"));
    }
    let (names, values): (Vec<String>, Vec<f64>) = target_map.clone().into_iter().unzip();
    let target = FeatureVector::new(names, values)?;

    // Search at the longest generated length so matched features carry over.
    let outcome = ga::ga_search(&g.ga, &target, g.period, g.length_max, &rng.derive(1))?;

    let series = simulate_matched(
        &outcome.spec,
        g.count,
        (g.length_min, g.length_max),
        g.period,
        cfg.horizon,
        &rng.derive(2),
    )?;
    io::write_series_csv(out.join("series.csv"), &series)?;
    util::write_json(
        &out.join("ga_result.json"),
        &GaResultFile {
            target: &target_map,
            tolerance: g.ga.tolerance,
            distance: outcome.distance,
            converged: outcome.converged,
            best_history: &outcome.best_history,
            spec: &outcome.spec,
        },
    )?;

    println!("generated {} series (seed {})", series.len(), cfg.seed);
    println!(
        "ga distance {:.6} (tolerance {}, {})",
        outcome.distance,
        g.ga.tolerance,
        if outcome.converged { "converged" } else { "not converged" }
    );
    if !outcome.converged {
        return Err(Failure::validation(
            "ga-not-converged",
            format!(
                "feature distance {:.6} exceeds tolerance {}",
                outcome.distance, g.ga.tolerance
            ),
        ));
    }
    Ok(())
}

/// Simulates `count` series from one fixed spec; only divergent noise draws
/// are retried, so the spec itself is never re-sampled.
fn simulate_matched(
    spec: &MarSpec,
    count: usize,
    (lo, hi): (usize, usize),
    period: usize,
    horizon: usize,
    rng: &RngStream,
) -> featurecast::Result<Vec<TimeSeries>> {
    let need = TimeSeries::min_total_length(period, horizon);
    if lo < need {
        return Err(Error::SeriesTooShort { id: "length_range".into(), needed: need, got: lo });
    }
    let burn_in = generator::default_burn_in(spec);
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.derive(i as u64);
            let length = stream.random_range(lo..=hi);
            for _ in 0..generator::MAX_RETRIES {
                match generator::simulate(spec, length, burn_in, &mut stream) {
                    Ok(s) => {
                        return TimeSeries::new(format!("ga{i:05}"), period, s.values().to_vec())
                    }
                    Err(Error::SimulationDiverged { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::RetryExhausted { attempts: generator::MAX_RETRIES })
        })
        .collect()
}
