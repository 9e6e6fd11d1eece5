//! Feature-based meta-learning: per-method error regressors, tempered
//! softmax weighting, and the weighted-loss training objective.

pub mod tree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{self, FeatureVector};
use crate::metrics;
use crate::pool::{self, ForecastBundle, Method};
use crate::rng::RngStream;
use crate::series::{self, Dataset};
use tree::{Ensemble, TreeParams};

/// Schema version of persisted models; bump on breaking layout changes.
pub const MODEL_VERSION: u32 = 1;

/// Fewest training rows accepted by `fit`.
pub const MIN_TRAIN_ROWS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Tempered-softmax weights over the pool.
    Combination,
    /// One-hot weight on the predicted-best method.
    Selection,
}

/// Which features feed the meta-learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSource {
    Historical,
    Diversity,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Rmsse,
    Smape,
    Mase,
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Rmsse => "rmsse",
            LossKind::Smape => "smape",
            LossKind::Mase => "mase",
        }
    }

    pub fn parse(name: &str) -> Result<LossKind> {
        match name {
            "rmsse" => Ok(LossKind::Rmsse),
            "smape" => Ok(LossKind::Smape),
            "mase" => Ok(LossKind::Mase),
            other => Err(Error::InvalidParameter(format!("unknown loss '{other}'"))),
        }
    }

    pub fn compute(
        &self,
        actuals: &[f64],
        forecasts: &[f64],
        history: &crate::series::TimeSeries,
    ) -> Result<f64> {
        match self {
            LossKind::Rmsse => metrics::rmsse(actuals, forecasts, history),
            LossKind::Smape => metrics::smape(actuals, forecasts),
            LossKind::Mase => metrics::mase(actuals, forecasts, history),
        }
    }
}

/// One training instance: a feature vector and the realized loss of every
/// pool method on the held-out window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainRow {
    pub series_id: String,
    pub features: Vec<f64>,
    pub losses: Vec<f64>,
}

/// Training instances plus the context they were built under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingTable {
    pub feature_names: Vec<String>,
    pub methods: Vec<String>,
    pub rows: Vec<TrainRow>,
    pub horizon: usize,
    pub alpha: f64,
    pub loss: LossKind,
    pub feature_source: FeatureSource,
}

/// Builds the meta-learning table from a dataset under the fixed split
/// rule (validation = last `horizon` points).
///
/// Series on which feature extraction or the loss is undefined are dropped
/// and reported as (id, reason) rather than failing the build.
pub fn build_training_table(
    dataset: &Dataset,
    roster: &[Method],
    loss: LossKind,
    source: FeatureSource,
    alpha: f64,
) -> Result<(TrainingTable, Vec<(String, String)>)> {
    if roster.is_empty() {
        return Err(Error::InvalidParameter("roster must be non-empty".into()));
    }
    let horizon = dataset.horizon();

    let results: Vec<std::result::Result<TrainRow, (String, String)>> = dataset
        .series()
        .par_iter()
        .map(|s| {
            let id = s.id().to_string();
            let build = || -> Result<TrainRow> {
                let split = series::split(s, horizon)?;
                let bundle = pool::forecast_all(&split.train, horizon, alpha, roster)?;
                let fv = features_for(&split.train, &bundle, source)?;
                let mut losses = Vec::with_capacity(roster.len());
                for points in &bundle.points {
                    losses.push(loss.compute(&split.validation, points, &split.train)?);
                }
                Ok(TrainRow { series_id: id.clone(), features: fv.values().to_vec(), losses })
            };
            build().map_err(|e| (s.id().to_string(), e.to_string()))
        })
        .collect();

    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(pair) => dropped.push(pair),
        }
    }
    if rows.is_empty() {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }

    // schema comes from any surviving series; identical by construction
    let probe = dataset
        .series()
        .iter()
        .find(|s| rows.iter().any(|r| r.series_id == s.id()))
        .expect("at least one surviving row");
    let split = series::split(probe, horizon)?;
    let bundle = pool::forecast_all(&split.train, horizon, alpha, roster)?;
    let feature_names = features_for(&split.train, &bundle, source)?.names().to_vec();

    Ok((
        TrainingTable {
            feature_names,
            methods: roster.iter().map(|m| m.name().to_string()).collect(),
            rows,
            horizon,
            alpha,
            loss,
            feature_source: source,
        },
        dropped,
    ))
}

/// Assembles the feature vector a meta-model sees for one series.
pub fn features_for(
    history: &crate::series::TimeSeries,
    bundle: &ForecastBundle,
    source: FeatureSource,
) -> Result<FeatureVector> {
    match source {
        FeatureSource::Historical => features::extract(history),
        FeatureSource::Diversity => features::diversity_features(bundle),
        FeatureSource::Both => features::extract(history)?
            .concat(&features::diversity_features(bundle)?),
    }
}

/// Meta-learner hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features per split; None means all.
    pub feature_subsample: Option<usize>,
    pub row_subsample: f64,
    pub mode: Mode,
    /// Regress on ln(1 + loss) instead of the raw loss.
    pub log_transform: bool,
}

impl Default for MetaParams {
    fn default() -> Self {
        MetaParams {
            trees: 100,
            max_depth: 6,
            min_leaf: 5,
            feature_subsample: None,
            row_subsample: 1.0,
            mode: Mode::Combination,
            log_transform: true,
        }
    }
}

/// A fitted meta-model; serializes to a single versioned JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaModel {
    pub version: u32,
    pub mode: Mode,
    pub tau: f64,
    pub feature_schema: Vec<String>,
    pub roster: Vec<String>,
    pub log_transform: bool,
    pub horizon: usize,
    pub alpha: f64,
    pub loss: LossKind,
    pub feature_source: FeatureSource,
    pub ensembles: Vec<Ensemble>,
}

/// Softmax temperature search interval.
pub const TAU_RANGE: (f64, f64) = (0.01, 100.0);

/// Fits one error regressor per pool method and picks the softmax
/// temperature minimizing the in-sample weighted loss.
pub fn fit(table: &TrainingTable, params: &MetaParams, rng: &RngStream) -> Result<MetaModel> {
    let n = table.rows.len();
    if n < MIN_TRAIN_ROWS {
        return Err(Error::TooFewRows { needed: MIN_TRAIN_ROWS, got: n });
    }
    let m = table.methods.len();
    if m == 0 {
        return Err(Error::DegeneratePool);
    }
    let p = table.feature_names.len();
    if p == 0 {
        return Err(Error::EmptySurvivors);
    }
    for row in &table.rows {
        if row.features.len() != p || row.losses.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "row '{}' does not match table shape",
                row.series_id
            )));
        }
        if row.losses.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "row '{}' has an invalid loss",
                row.series_id
            )));
        }
    }

    let x: Vec<Vec<f64>> = table.rows.iter().map(|r| r.features.clone()).collect();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        feature_subsample: params.feature_subsample.unwrap_or(p).min(p),
    };

    let ensembles: Vec<Ensemble> = (0..m)
        .into_par_iter()
        .map(|i| {
            let y: Vec<f64> = table
                .rows
                .iter()
                .map(|r| if params.log_transform { r.losses[i].ln_1p() } else { r.losses[i] })
                .collect();
            Ensemble::fit(
                &x,
                &y,
                params.trees,
                &tree_params,
                params.row_subsample,
                &rng.derive(i as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    // in-sample predicted errors for the temperature search
    let predicted: Vec<Vec<f64>> = x
        .par_iter()
        .map(|xi| {
            (0..m)
                .map(|i| back_transform(ensembles[i].predict(xi), params.log_transform))
                .collect()
        })
        .collect();

    let tau = match params.mode {
        Mode::Selection => 1.0,
        Mode::Combination => {
            let weighted_loss = |tau: f64| -> f64 {
                let mut total = 0.0;
                for (row, e) in table.rows.iter().zip(&predicted) {
                    let w = softmax_weights(e, tau);
                    total += w.iter().zip(&row.losses).map(|(w, l)| w * l).sum::<f64>();
                }
                total / n as f64
            };
            // golden-section over log-temperature; unimodal enough in
            // practice and the endpoints are checked explicitly
            let best = golden_section(
                |u| weighted_loss(u.exp()),
                TAU_RANGE.0.ln(),
                TAU_RANGE.1.ln(),
                80,
            );
            let mut tau = best.exp();
            let mut val = weighted_loss(tau);
            for cand in [TAU_RANGE.0, TAU_RANGE.1] {
                let v = weighted_loss(cand);
                if v < val {
                    val = v;
                    tau = cand;
                }
            }
            tau
        }
    };

    Ok(MetaModel {
        version: MODEL_VERSION,
        mode: params.mode,
        tau,
        feature_schema: table.feature_names.clone(),
        roster: table.methods.clone(),
        log_transform: params.log_transform,
        horizon: table.horizon,
        alpha: table.alpha,
        loss: table.loss,
        feature_source: table.feature_source,
        ensembles,
    })
}

fn back_transform(pred: f64, log_transform: bool) -> f64 {
    let v = if log_transform { pred.exp_m1() } else { pred };
    v.max(0.0)
}

fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Numerically stable tempered softmax over negated errors. Adding a
/// constant to every error leaves the output unchanged.
pub fn softmax_weights(errors: &[f64], tau: f64) -> Vec<f64> {
    let min = errors.iter().cloned().fold(f64::INFINITY, f64::min);
    let exps: Vec<f64> = errors.iter().map(|e| (-(e - min) / tau).exp()).collect();
    let sum: f64 = exps.iter().sum();
    if sum <= 0.0 || !sum.is_finite() {
        // pathological tau; fall back to hard argmin
        let mut w = vec![0.0; errors.len()];
        let best = errors
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        w[best] = 1.0;
        return w;
    }
    exps.iter().map(|e| e / sum).collect()
}

/// Predicted per-method errors for one series' feature vector; the vector
/// may carry extra features but must cover the model schema.
pub fn predict_errors(model: &MetaModel, features: &FeatureVector) -> Result<Vec<f64>> {
    let fv = features.restrict(&model.feature_schema)?;
    Ok(model
        .ensembles
        .iter()
        .map(|e| back_transform(e.predict(fv.values()), model.log_transform))
        .collect())
}

/// Pool weights for one series: tempered softmax in combination mode,
/// one-hot argmin (first winner on ties) in selection mode.
pub fn predict_weights(model: &MetaModel, features: &FeatureVector) -> Result<Vec<f64>> {
    let errors = predict_errors(model, features)?;
    Ok(weights_from_errors(model, &errors))
}

fn weights_from_errors(model: &MetaModel, errors: &[f64]) -> Vec<f64> {
    match model.mode {
        Mode::Combination => softmax_weights(errors, model.tau),
        Mode::Selection => {
            let mut w = vec![0.0; errors.len()];
            let best = errors
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(a.0.cmp(&b.0)))
                .map(|(i, _)| i)
                .unwrap_or(0);
            w[best] = 1.0;
            w
        }
    }
}

/// Weight-averaged points and interval bounds for one bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CombinedForecast {
    pub points: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn combine(bundle: &ForecastBundle, weights: &[f64]) -> Result<CombinedForecast> {
    metrics::validate_weights(weights)?;
    if weights.len() != bundle.method_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights vs {} methods",
            weights.len(),
            bundle.method_count()
        )));
    }
    let h = bundle.horizon();
    let avg = |rows: &Vec<Vec<f64>>| -> Vec<f64> {
        (0..h)
            .map(|k| weights.iter().zip(rows).map(|(w, r)| w * r[k]).sum())
            .collect()
    };
    Ok(CombinedForecast {
        points: avg(&bundle.points),
        lower: avg(&bundle.lower),
        upper: avg(&bundle.upper),
        weights: weights.to_vec(),
    })
}

/// Mean weighted loss of the model over a table (the training objective).
pub fn objective(table: &TrainingTable, model: &MetaModel) -> Result<f64> {
    if model.roster != table.methods {
        return Err(Error::RosterMismatch(
            "model and table rosters differ".into(),
        ));
    }
    if model.feature_schema != table.feature_names {
        return Err(Error::SchemaMismatch {
            missing: model
                .feature_schema
                .iter()
                .filter(|n| !table.feature_names.contains(n))
                .cloned()
                .collect(),
        });
    }
    let mut total = 0.0;
    for row in &table.rows {
        let errors: Vec<f64> = model
            .ensembles
            .iter()
            .map(|e| back_transform(e.predict(&row.features), model.log_transform))
            .collect();
        let w = weights_from_errors(model, &errors);
        total += w.iter().zip(&row.losses).map(|(w, l)| w * l).sum::<f64>();
    }
    Ok(total / table.rows.len() as f64)
}

/// Mean loss of the equal-weight combination benchmark.
pub fn uniform_objective(table: &TrainingTable) -> Result<f64> {
    let m = table.methods.len();
    if m == 0 {
        return Err(Error::DegeneratePool);
    }
    let mut total = 0.0;
    for row in &table.rows {
        total += row.losses.iter().sum::<f64>() / m as f64;
    }
    Ok(total / table.rows.len() as f64)
}

/// Mean loss of the per-series best method (hindsight floor).
pub fn oracle_objective(table: &TrainingTable) -> Result<f64> {
    let mut total = 0.0;
    for row in &table.rows {
        total += row.losses.iter().cloned().fold(f64::INFINITY, f64::min);
    }
    Ok(total / table.rows.len() as f64)
}

/// Persists a model as pretty JSON.
pub fn save_model<W: std::io::Write>(writer: W, model: &MetaModel) -> Result<()> {
    serde_json::to_writer_pretty(writer, model)?;
    Ok(())
}

/// Loads a model, rejecting unknown schema versions before full parsing.
pub fn load_model<R: std::io::Read>(reader: R) -> Result<MetaModel> {
    let value: serde_json::Value = serde_json::from_reader(reader)?;
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::InvalidParameter("model file has no version field".into()))?;
    if version != MODEL_VERSION as u64 {
        return Err(Error::ModelVersion(version as u32));
    }
    Ok(serde_json::from_value(value)?)
}
