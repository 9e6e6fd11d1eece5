//! The candidate forecaster pool.
//!
//! Eleven built-in methods spanning level, trend, seasonal and intermittent
//! behaviors, each producing H-step point forecasts plus central prediction
//! intervals from in-sample one-step residuals. A method that fails on a
//! series degrades to naive with a substitution flag instead of aborting the
//! batch.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;
use crate::stats::{self, normal_quantile};

/// Built-in forecast methods, in canonical roster order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mean,
    Naive,
    SeasonalNaive,
    Drift,
    Ses,
    Holt,
    DampedHolt,
    Theta,
    Croston,
    Sba,
    Tsb,
}

pub const ALL_METHODS: [Method; 11] = [
    Method::Mean,
    Method::Naive,
    Method::SeasonalNaive,
    Method::Drift,
    Method::Ses,
    Method::Holt,
    Method::DampedHolt,
    Method::Theta,
    Method::Croston,
    Method::Sba,
    Method::Tsb,
];

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Mean => "mean",
            Method::Naive => "naive",
            Method::SeasonalNaive => "seasonal-naive",
            Method::Drift => "drift",
            Method::Ses => "ses",
            Method::Holt => "holt",
            Method::DampedHolt => "damped-holt",
            Method::Theta => "theta",
            Method::Croston => "croston",
            Method::Sba => "sba",
            Method::Tsb => "tsb",
        }
    }

    pub fn parse(name: &str) -> Result<Method> {
        ALL_METHODS
            .iter()
            .copied()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::UnknownMethod(name.to_string()))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn parse_roster(names: &[String]) -> Result<Vec<Method>> {
    if names.is_empty() {
        return Err(Error::InvalidParameter("roster must be non-empty".into()));
    }
    names.iter().map(|n| Method::parse(n)).collect()
}

/// Point and interval forecasts of every roster method for one series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastBundle {
    pub methods: Vec<String>,
    /// M x H point forecasts, rows in `methods` order.
    pub points: Vec<Vec<f64>>,
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
    /// Interval level is 1 - alpha.
    pub alpha: f64,
    /// Methods that failed on this series and were replaced by naive.
    pub substituted: Vec<String>,
}

impl ForecastBundle {
    pub fn horizon(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn method_count(&self) -> usize {
        self.methods.len()
    }

    pub fn row(&self, method: &str) -> Option<usize> {
        self.methods.iter().position(|m| m == method)
    }

    /// A copy restricted to `keep`, preserving this bundle's row order.
    pub fn restrict(&self, keep: &[String]) -> Result<ForecastBundle> {
        let mut idx = Vec::with_capacity(keep.len());
        for name in keep {
            idx.push(self.row(name).ok_or_else(|| {
                Error::RosterMismatch(format!("method '{name}' not in bundle"))
            })?);
        }
        idx.sort_unstable();
        Ok(ForecastBundle {
            methods: idx.iter().map(|&i| self.methods[i].clone()).collect(),
            points: idx.iter().map(|&i| self.points[i].clone()).collect(),
            lower: idx.iter().map(|&i| self.lower[i].clone()).collect(),
            upper: idx.iter().map(|&i| self.upper[i].clone()).collect(),
            alpha: self.alpha,
            substituted: self
                .substituted
                .iter()
                .filter(|m| keep.contains(m))
                .cloned()
                .collect(),
        })
    }

    fn validate(&self) -> Result<()> {
        let h = self.horizon();
        for (i, _) in self.methods.iter().enumerate() {
            if self.points[i].len() != h || self.lower[i].len() != h || self.upper[i].len() != h {
                return Err(Error::DimensionMismatch("ragged forecast matrix".into()));
            }
            for k in 0..h {
                let (lo, pt, up) = (self.lower[i][k], self.points[i][k], self.upper[i][k]);
                if !(lo.is_finite() && pt.is_finite() && up.is_finite()) {
                    return Err(Error::DimensionMismatch(format!(
                        "non-finite forecast for method '{}'",
                        self.methods[i]
                    )));
                }
                if lo > pt || pt > up {
                    return Err(Error::DimensionMismatch(format!(
                        "interval does not bracket point for method '{}'",
                        self.methods[i]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// How a method's interval width grows with the forecast step.
#[derive(Debug, Clone, Copy)]
enum HScale {
    /// Flat width (level methods).
    Level,
    /// sqrt(h) growth (random-walk-like methods).
    SqrtH,
    /// sqrt(ceil(h / period)) growth.
    SqrtSeasonal(usize),
}

impl HScale {
    fn factor(&self, h: usize) -> f64 {
        match *self {
            HScale::Level => 1.0,
            HScale::SqrtH => (h as f64).sqrt(),
            HScale::SqrtSeasonal(p) => ((h as f64) / p as f64).ceil().sqrt(),
        }
    }
}

struct MethodFit {
    points: Vec<f64>,
    /// In-sample one-step residuals; may be empty (zero-width intervals).
    residuals: Vec<f64>,
    hscale: HScale,
}

/// Smoothing constant for the Croston family.
pub const CROSTON_ALPHA: f64 = 0.1;

/// Runs every roster method on one series.
///
/// A method that errors is replaced by naive and recorded in `substituted`.
pub fn forecast_all(
    series: &TimeSeries,
    horizon: usize,
    alpha: f64,
    roster: &[Method],
) -> Result<ForecastBundle> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter("alpha must be in (0,1)".into()));
    }
    if roster.is_empty() {
        return Err(Error::InvalidParameter("roster must be non-empty".into()));
    }
    let needed = TimeSeries::min_history(series.period());
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            id: series.id().to_string(),
            needed,
            got: series.len(),
        });
    }

    let mut methods = Vec::with_capacity(roster.len());
    let mut points = Vec::with_capacity(roster.len());
    let mut lower = Vec::with_capacity(roster.len());
    let mut upper = Vec::with_capacity(roster.len());
    let mut substituted = Vec::new();

    for &m in roster {
        let fit = match fit_method(m, series, horizon) {
            Ok(f) => f,
            Err(_) => {
                substituted.push(m.name().to_string());
                fit_method(Method::Naive, series, horizon)?
            }
        };
        let ok = fit.points.iter().all(|v| v.is_finite());
        let fit = if ok {
            fit
        } else {
            substituted.push(m.name().to_string());
            fit_method(Method::Naive, series, horizon)?
        };
        let (lo, up) = intervals_from_fit(&fit, alpha);
        methods.push(m.name().to_string());
        points.push(fit.points);
        lower.push(lo);
        upper.push(up);
    }

    let bundle = ForecastBundle { methods, points, lower, upper, alpha, substituted };
    bundle.validate()?;
    Ok(bundle)
}

/// Point forecasts of a single method (no intervals).
pub fn point_forecast(method: Method, series: &TimeSeries, horizon: usize) -> Result<Vec<f64>> {
    fit_method(method, series, horizon).map(|f| f.points)
}

fn fit_method(method: Method, series: &TimeSeries, horizon: usize) -> Result<MethodFit> {
    let y = series.values();
    match method {
        Method::Mean => Ok(mean_fit(y, horizon)),
        Method::Naive => Ok(naive_fit(y, horizon)),
        Method::SeasonalNaive => Ok(snaive_fit(y, series.period(), horizon)),
        Method::Drift => drift_fit(y, horizon),
        Method::Ses => Ok(ses_method_fit(y, horizon)),
        Method::Holt => holt_fit(y, horizon),
        Method::DampedHolt => damped_holt_fit(y, horizon),
        Method::Theta => theta_fit(y, horizon),
        Method::Croston => croston_fit(y, horizon, series.id(), CrostonVariant::Classic),
        Method::Sba => croston_fit(y, horizon, series.id(), CrostonVariant::Sba),
        Method::Tsb => Ok(tsb_fit(y, horizon)),
    }
}

fn mean_fit(y: &[f64], horizon: usize) -> MethodFit {
    let m = stats::mean(y);
    // one-step residuals against the expanding mean
    let mut residuals = Vec::with_capacity(y.len().saturating_sub(1));
    let mut sum = y[0];
    for t in 1..y.len() {
        residuals.push(y[t] - sum / t as f64);
        sum += y[t];
    }
    MethodFit { points: vec![m; horizon], residuals, hscale: HScale::Level }
}

fn naive_fit(y: &[f64], horizon: usize) -> MethodFit {
    let last = *y.last().unwrap();
    let residuals = y.windows(2).map(|w| w[1] - w[0]).collect();
    MethodFit { points: vec![last; horizon], residuals, hscale: HScale::SqrtH }
}

fn snaive_fit(y: &[f64], period: usize, horizon: usize) -> MethodFit {
    let t = y.len();
    let points = (1..=horizon).map(|h| y[t - period + (h - 1) % period]).collect();
    let residuals = (period..t).map(|i| y[i] - y[i - period]).collect();
    MethodFit { points, residuals, hscale: HScale::SqrtSeasonal(period) }
}

fn drift_fit(y: &[f64], horizon: usize) -> Result<MethodFit> {
    let t = y.len();
    if t < 2 {
        return Err(Error::SeriesTooShort { id: String::new(), needed: 2, got: t });
    }
    let slope = (y[t - 1] - y[0]) / (t - 1) as f64;
    let last = y[t - 1];
    let points = (1..=horizon).map(|h| last + slope * h as f64).collect();
    let mut residuals = Vec::new();
    for i in 2..t {
        let s = (y[i - 1] - y[0]) / (i - 1) as f64;
        residuals.push(y[i] - (y[i - 1] + s));
    }
    Ok(MethodFit { points, residuals, hscale: HScale::SqrtH })
}

/// One pass of simple exponential smoothing. Returns the final level, the
/// one-step residuals and their sum of squares.
fn ses_pass(y: &[f64], alpha: f64) -> (f64, Vec<f64>, f64) {
    let mut level = y[0];
    let mut residuals = Vec::with_capacity(y.len() - 1);
    let mut sse = 0.0;
    for &v in &y[1..] {
        let e = v - level;
        residuals.push(e);
        sse += e * e;
        level += alpha * e;
    }
    (level, residuals, sse)
}

/// Grid-fits the SES smoothing parameter over {0.01, 0.02, ..., 0.99}
/// by one-step squared error; first grid point wins ties.
pub(crate) fn ses_fit(y: &[f64]) -> (f64, f64, Vec<f64>) {
    let mut best_alpha = 0.01;
    let mut best_sse = f64::INFINITY;
    for i in 1..=99u32 {
        let alpha = i as f64 / 100.0;
        let (_, _, sse) = ses_pass(y, alpha);
        if sse < best_sse {
            best_sse = sse;
            best_alpha = alpha;
        }
    }
    let (level, residuals, _) = ses_pass(y, best_alpha);
    (best_alpha, level, residuals)
}

fn ses_method_fit(y: &[f64], horizon: usize) -> MethodFit {
    let (_, level, residuals) = ses_fit(y);
    MethodFit { points: vec![level; horizon], residuals, hscale: HScale::Level }
}

fn holt_pass(y: &[f64], alpha: f64, beta: f64, phi: f64) -> (f64, f64, Vec<f64>, f64) {
    let mut level = y[0];
    let mut trend = y[1] - y[0];
    let mut residuals = Vec::new();
    let mut sse = 0.0;
    for t in 1..y.len() {
        let pred = level + phi * trend;
        let e = y[t] - pred;
        if t >= 2 {
            residuals.push(e);
            sse += e * e;
        }
        let new_level = alpha * y[t] + (1.0 - alpha) * pred;
        trend = beta * (new_level - level) + (1.0 - beta) * phi * trend;
        level = new_level;
    }
    (level, trend, residuals, sse)
}

const DAMPING_GRID: [f64; 5] = [0.80, 0.85, 0.90, 0.95, 0.98];

fn fit_holt_family(y: &[f64], damped: bool) -> Result<(f64, f64, f64, Vec<f64>)> {
    if y.len() < 3 {
        return Err(Error::SeriesTooShort { id: String::new(), needed: 3, got: y.len() });
    }
    let phis: &[f64] = if damped { &DAMPING_GRID } else { &[1.0] };
    let mut best = (f64::INFINITY, 0.1, 0.1, 1.0);
    for i in 1..=19u32 {
        let alpha = i as f64 * 0.05;
        for j in 1..=19u32 {
            let beta = j as f64 * 0.05;
            for &phi in phis {
                let (_, _, _, sse) = holt_pass(y, alpha, beta, phi);
                if sse < best.0 {
                    best = (sse, alpha, beta, phi);
                }
            }
        }
    }
    let (_, alpha, beta, phi) = best;
    let (level, trend, residuals, _) = holt_pass(y, alpha, beta, phi);
    Ok((level, trend, phi, residuals))
}

fn holt_fit(y: &[f64], horizon: usize) -> Result<MethodFit> {
    let (level, trend, _, residuals) = fit_holt_family(y, false)?;
    let points = (1..=horizon).map(|h| level + trend * h as f64).collect();
    Ok(MethodFit { points, residuals, hscale: HScale::Level })
}

fn damped_holt_fit(y: &[f64], horizon: usize) -> Result<MethodFit> {
    let (level, trend, phi, residuals) = fit_holt_family(y, true)?;
    let mut damp_sum = 0.0;
    let mut points = Vec::with_capacity(horizon);
    for h in 1..=horizon {
        damp_sum += phi.powi(h as i32);
        points.push(level + trend * damp_sum);
    }
    Ok(MethodFit { points, residuals, hscale: HScale::Level })
}

/// Theta as SES plus half the OLS trend slope times the forecast step.
fn theta_fit(y: &[f64], horizon: usize) -> Result<MethodFit> {
    if y.len() < 3 {
        return Err(Error::SeriesTooShort { id: String::new(), needed: 3, got: y.len() });
    }
    let (_, level, residuals) = ses_fit(y);
    let slope = stats::ols_slope(y);
    let points = (1..=horizon).map(|h| level + 0.5 * slope * h as f64).collect();
    Ok(MethodFit { points, residuals, hscale: HScale::Level })
}

enum CrostonVariant {
    Classic,
    Sba,
}

fn croston_fit(
    y: &[f64],
    horizon: usize,
    id: &str,
    variant: CrostonVariant,
) -> Result<MethodFit> {
    let alpha = CROSTON_ALPHA;
    let factor = match variant {
        CrostonVariant::Classic => 1.0,
        CrostonVariant::Sba => 1.0 - alpha / 2.0,
    };
    let first = y
        .iter()
        .position(|&v| v != 0.0)
        .ok_or_else(|| Error::AllZeroSeries { id: id.to_string() })?;

    // size and interval chains, seeded by the first demand
    let mut size = y[first];
    let mut interval = (first + 1) as f64;
    let mut last_demand_t = first;
    let mut residuals = Vec::new();
    for t in (first + 1)..y.len() {
        let rate = factor * size / interval;
        residuals.push(y[t] - rate);
        if y[t] != 0.0 {
            let gap = (t - last_demand_t) as f64;
            size += alpha * (y[t] - size);
            interval += alpha * (gap - interval);
            last_demand_t = t;
        }
    }
    let rate = factor * size / interval;
    Ok(MethodFit { points: vec![rate; horizon], residuals, hscale: HScale::Level })
}

fn tsb_fit(y: &[f64], horizon: usize) -> MethodFit {
    let alpha = CROSTON_ALPHA;
    let mut prob = if y[0] != 0.0 { 1.0 } else { 0.0 };
    let mut size = if y[0] != 0.0 { y[0] } else { 0.0 };
    let mut residuals = Vec::new();
    for &v in &y[1..] {
        residuals.push(v - prob * size);
        let demand = v != 0.0;
        prob += alpha * (if demand { 1.0 } else { 0.0 } - prob);
        if demand {
            size += alpha * (v - size);
        }
    }
    MethodFit { points: vec![prob * size; horizon], residuals, hscale: HScale::Level }
}

fn intervals_from_fit(fit: &MethodFit, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let sigma = stats::sample_std(&fit.residuals);
    let z = normal_quantile(1.0 - alpha / 2.0);
    let mut lower = Vec::with_capacity(fit.points.len());
    let mut upper = Vec::with_capacity(fit.points.len());
    for (h, &p) in fit.points.iter().enumerate() {
        let w = z * sigma * fit.hscale.factor(h + 1);
        lower.push(p - w);
        upper.push(p + w);
    }
    (lower, upper)
}

/// One JSONL record per (series, method) in a forecast bundle file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleRecord {
    pub series_id: String,
    pub method: String,
    pub points: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub alpha: f64,
}

pub fn write_bundle_jsonl<W: Write>(
    writer: &mut W,
    series_id: &str,
    bundle: &ForecastBundle,
) -> Result<()> {
    for (i, m) in bundle.methods.iter().enumerate() {
        let rec = BundleRecord {
            series_id: series_id.to_string(),
            method: m.clone(),
            points: bundle.points[i].clone(),
            lower: bundle.lower[i].clone(),
            upper: bundle.upper[i].clone(),
            alpha: bundle.alpha,
        };
        serde_json::to_writer(&mut *writer, &rec)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_bundle_jsonl<R: BufRead>(reader: R) -> Result<Vec<BundleRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: BundleRecord = serde_json::from_str(&line).map_err(|e| Error::Format {
            line: i as u64 + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}
