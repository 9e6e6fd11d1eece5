//! Scale-free series features and forecast-diversity features.
//!
//! The catalog is fixed and ordered; every extractor returns finite values
//! for any valid series by falling back to documented conventions on
//! degenerate input (constant series, all-zero series, too-short windows).

pub mod select;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pool::ForecastBundle;
use crate::series::TimeSeries;
use crate::stats;

/// Canonical feature order shared by tables, schemas and models.
pub const CATALOG: [&str; 15] = [
    "length",
    "trend_strength",
    "seasonal_strength",
    "acf1",
    "diff1_acf1",
    "diff2_acf1",
    "seasonal_acf1",
    "acf10_sum",
    "spectral_entropy",
    "stability",
    "lumpiness",
    "demand_cv",
    "zero_proportion",
    "demand_interval",
    "recency",
];

/// A named, finite feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<FeatureVector> {
        if names.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} names vs {} values",
                names.len(),
                values.len()
            )));
        }
        for (n, v) in names.iter().zip(&values) {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("feature '{n}' is not finite")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::InvalidParameter(format!("duplicate feature '{n}'")));
            }
        }
        Ok(FeatureVector { names, values })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    /// Concatenation; duplicate names are rejected.
    pub fn concat(&self, other: &FeatureVector) -> Result<FeatureVector> {
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        FeatureVector::new(names, values)
    }

    /// Projection onto `keep` (order taken from `keep`).
    pub fn restrict(&self, keep: &[String]) -> Result<FeatureVector> {
        let mut values = Vec::with_capacity(keep.len());
        let mut missing = Vec::new();
        for name in keep {
            match self.get(name) {
                Some(v) => values.push(v),
                None => missing.push(name.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(Error::SchemaMismatch { missing });
        }
        FeatureVector::new(keep.to_vec(), values)
    }
}

/// Extracts the full 15-feature catalog from one series.
pub fn extract(series: &TimeSeries) -> Result<FeatureVector> {
    let needed = TimeSeries::min_history(series.period());
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            id: series.id().to_string(),
            needed,
            got: series.len(),
        });
    }
    let y = series.values();
    let t = y.len();
    let period = series.period();

    let (trend, seasonal) = trend_seasonal_strength(y, period);
    let d1 = diff(y, 1);
    let d2 = diff(&d1, 1);
    let sd = diff(y, period);

    let mut acf10 = 0.0;
    for lag in 1..=10usize.min(t.saturating_sub(2)) {
        let a = acf_or_zero(y, lag);
        acf10 += a * a;
    }

    let nonzero: Vec<f64> = y.iter().copied().filter(|&v| v != 0.0).collect();
    let demand_cv = if nonzero.len() >= 2 {
        let m = stats::mean(&nonzero);
        if m.abs() < 1e-300 {
            0.0
        } else {
            stats::sample_std(&nonzero) / m.abs()
        }
    } else {
        0.0
    };
    let zero_count = t - nonzero.len();
    // all-zero series take the maximum interval T and recency 0
    let demand_interval =
        if nonzero.is_empty() { t as f64 } else { t as f64 / nonzero.len() as f64 };
    let recency = y
        .iter()
        .rposition(|&v| v != 0.0)
        .map_or(0.0, |i| (i + 1) as f64 / t as f64);

    let (stability, lumpiness) = tiled_moments(y, period);

    let values = vec![
        (t as f64).ln(),
        trend,
        seasonal,
        acf_or_zero(y, 1),
        acf_or_zero(&d1, 1),
        acf_or_zero(&d2, 1),
        acf_or_zero(&sd, 1),
        acf10,
        spectral_entropy(y),
        stability,
        lumpiness,
        demand_cv,
        zero_count as f64 / t as f64,
        demand_interval,
        recency,
    ];
    FeatureVector::new(CATALOG.iter().map(|s| s.to_string()).collect(), values)
}

fn diff(y: &[f64], lag: usize) -> Vec<f64> {
    if y.len() <= lag {
        return Vec::new();
    }
    (lag..y.len()).map(|i| y[i] - y[i - lag]).collect()
}

/// Lag-k autocorrelation with the mean taken over the whole slice.
/// Returns 0 for constant or too-short input.
pub fn acf_or_zero(y: &[f64], lag: usize) -> f64 {
    let n = y.len();
    if lag == 0 {
        return 1.0;
    }
    if n <= lag + 1 {
        return 0.0;
    }
    let m = stats::mean(y);
    let denom: f64 = y.iter().map(|v| (v - m) * (v - m)).sum();
    if denom <= 0.0 {
        return 0.0;
    }
    let num: f64 = (lag..n).map(|i| (y[i] - m) * (y[i - lag] - m)).sum();
    num / denom
}

/// Classical moving-average decomposition strengths, both clamped to [0, 1].
///
/// Period 1 series use a centered window of min(T, 13) observations (forced
/// odd) and have seasonal strength 0 by definition.
pub fn trend_seasonal_strength(y: &[f64], period: usize) -> (f64, f64) {
    if period <= 1 {
        let mut w = y.len().min(13);
        if w % 2 == 0 {
            w -= 1;
        }
        if w < 3 {
            return (0.0, 0.0);
        }
        let half = (w - 1) / 2;
        let trend = centered_ma(y, w);
        let lo = half;
        let hi = y.len() - half;
        let remainder: Vec<f64> = (lo..hi).map(|i| y[i] - trend[i - lo]).collect();
        let base: Vec<f64> = y[lo..hi].to_vec();
        let vb = stats::variance(&base);
        if vb <= 0.0 {
            return (0.0, 0.0);
        }
        let s = (1.0 - stats::variance(&remainder) / vb).clamp(0.0, 1.0);
        return (s, 0.0);
    }

    let m = period;
    let half = m / 2;
    if y.len() < m + 2 * half + 1 {
        return (0.0, 0.0);
    }
    // trend at t in [half, T-1-half]
    let trend: Vec<f64> = if m % 2 == 1 {
        centered_ma(y, m)
    } else {
        // 2xm moving average: weights (0.5, 1, ..., 1, 0.5) / m over m+1 points
        (half..y.len() - half)
            .map(|t| {
                let mut s = 0.5 * (y[t - half] + y[t + half]);
                for k in (t - half + 1)..(t + half) {
                    s += y[k];
                }
                s / m as f64
            })
            .collect()
    };
    let lo = half;
    let hi = y.len() - half;

    let detrended: Vec<f64> = (lo..hi).map(|i| y[i] - trend[i - lo]).collect();

    // seasonal indexes: phase means of the detrended window, centered
    let mut sums = vec![0.0; m];
    let mut counts = vec![0usize; m];
    for (off, d) in detrended.iter().enumerate() {
        let phase = (lo + off) % m;
        sums[phase] += d;
        counts[phase] += 1;
    }
    let mut idx = vec![0.0; m];
    for p in 0..m {
        if counts[p] > 0 {
            idx[p] = sums[p] / counts[p] as f64;
        }
    }
    let idx_mean = stats::mean(&idx);
    for v in &mut idx {
        *v -= idx_mean;
    }

    let remainder: Vec<f64> =
        (lo..hi).map(|i| y[i] - trend[i - lo] - idx[i % m]).collect();
    let deseasonalized: Vec<f64> = (lo..hi).map(|i| y[i] - idx[i % m]).collect();

    let vr = stats::variance(&remainder);
    let vde = stats::variance(&deseasonalized);
    let vdt = stats::variance(&detrended);
    let trend_strength = if vde <= 0.0 { 0.0 } else { (1.0 - vr / vde).clamp(0.0, 1.0) };
    let seasonal_strength = if vdt <= 0.0 { 0.0 } else { (1.0 - vr / vdt).clamp(0.0, 1.0) };
    (trend_strength, seasonal_strength)
}

/// Simple centered moving average with odd window `w`; output covers
/// t in [(w-1)/2, T-1-(w-1)/2].
fn centered_ma(y: &[f64], w: usize) -> Vec<f64> {
    let half = (w - 1) / 2;
    (half..y.len() - half)
        .map(|t| y[t - half..=t + half].iter().sum::<f64>() / w as f64)
        .collect()
}

/// Shannon entropy of the smoothed, normalized periodogram, scaled to [0, 1].
/// Degenerate input (constant series, fewer than two frequency bins) maps
/// to 0.
pub fn spectral_entropy(y: &[f64]) -> f64 {
    let n = y.len();
    let bins = n / 2;
    if bins < 2 {
        return 0.0;
    }
    let m = stats::mean(y);
    let z: Vec<f64> = y.iter().map(|v| v - m).collect();

    let mut pgram = Vec::with_capacity(bins);
    for j in 1..=bins {
        let w = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for (t, &v) in z.iter().enumerate() {
            let a = w * t as f64;
            re += v * a.cos();
            im -= v * a.sin();
        }
        pgram.push((re * re + im * im) / n as f64);
    }

    // width-3 smoothing with shrinking edges
    let smoothed: Vec<f64> = (0..bins)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(bins - 1);
            pgram[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();

    let total: f64 = smoothed.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return 0.0;
    }
    let mut h = 0.0;
    for &s in &smoothed {
        let p = s / total;
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    (h / (bins as f64).ln()).clamp(0.0, 1.0)
}

/// Stability (variance of tile means) and lumpiness (variance of tile
/// variances) over non-overlapping tiles of the standardized series.
///
/// Tile width is the period, or 10 for non-seasonal series; fewer than two
/// full tiles yields (0, 0), as does a constant series.
fn tiled_moments(y: &[f64], period: usize) -> (f64, f64) {
    let w = if period > 1 { period } else { 10 };
    let tiles = y.len() / w;
    if tiles < 2 {
        return (0.0, 0.0);
    }
    let m = stats::mean(y);
    let sd = stats::sample_std(y);
    if sd <= 0.0 {
        return (0.0, 0.0);
    }
    let z: Vec<f64> = y.iter().map(|v| (v - m) / sd).collect();
    let mut means = Vec::with_capacity(tiles);
    let mut vars = Vec::with_capacity(tiles);
    for k in 0..tiles {
        let tile = &z[k * w..(k + 1) * w];
        means.push(stats::mean(tile));
        vars.push(stats::variance(tile));
    }
    (stats::variance(&means), stats::variance(&vars))
}

/// Pairwise forecast diversity for one bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiversityMatrix {
    pub methods: Vec<String>,
    /// Mean squared pairwise forecast difference, M x M, zero diagonal.
    pub raw: Vec<Vec<f64>>,
    /// Upper-triangle-normalized version; entries above the diagonal sum
    /// to 1 unless the pool is degenerate.
    pub scaled: Vec<Vec<f64>>,
}

impl DiversityMatrix {
    /// Upper-triangle entries of the scaled matrix, row-major.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let m = self.methods.len();
        let mut out = Vec::with_capacity(m * (m - 1) / 2);
        for i in 0..m {
            for j in i + 1..m {
                out.push(self.scaled[i][j]);
            }
        }
        out
    }

    pub fn pair_names(&self) -> Vec<String> {
        let m = self.methods.len();
        let mut out = Vec::with_capacity(m * (m - 1) / 2);
        for i in 0..m {
            for j in i + 1..m {
                out.push(format!("sdiv_{}_{}", self.methods[i], self.methods[j]));
            }
        }
        out
    }
}

/// Computes raw and scaled pairwise diversity from a bundle's point
/// forecasts.
///
/// When every pair of methods forecasts identically the scaled matrix is
/// undefined; `strict` turns that into an error, otherwise it is all zeros.
pub fn diversity(bundle: &ForecastBundle, strict: bool) -> Result<DiversityMatrix> {
    let m = bundle.method_count();
    if m < 2 {
        return Err(Error::DegeneratePool);
    }
    let h = bundle.horizon();
    let mut raw = vec![vec![0.0; m]; m];
    let mut ssd = vec![vec![0.0; m]; m];
    let mut total = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let s: f64 = (0..h)
                .map(|k| {
                    let d = bundle.points[i][k] - bundle.points[j][k];
                    d * d
                })
                .sum();
            ssd[i][j] = s;
            ssd[j][i] = s;
            raw[i][j] = s / h as f64;
            raw[j][i] = raw[i][j];
            total += s;
        }
    }
    if total <= 0.0 {
        if strict {
            return Err(Error::DegeneratePool);
        }
        return Ok(DiversityMatrix { methods: bundle.methods.clone(), scaled: raw.clone(), raw });
    }
    let scaled =
        ssd.iter().map(|row| row.iter().map(|v| v / total).collect()).collect();
    Ok(DiversityMatrix { methods: bundle.methods.clone(), raw, scaled })
}

/// Flattens scaled diversity into a named feature vector
/// (`sdiv_<a>_<b>` per method pair). Degenerate pools yield all zeros.
pub fn diversity_features(bundle: &ForecastBundle) -> Result<FeatureVector> {
    let d = diversity(bundle, false)?;
    FeatureVector::new(d.pair_names(), d.upper_triangle())
}

/// Feature vectors for many series under one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    series_ids: Vec<String>,
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn from_rows(rows: Vec<(String, FeatureVector)>) -> Result<FeatureTable> {
        let Some((_, first)) = rows.first() else {
            return Err(Error::TooFewRows { needed: 1, got: 0 });
        };
        let names = first.names().to_vec();
        let mut ids = Vec::with_capacity(rows.len());
        let mut data = Vec::with_capacity(rows.len());
        let mut seen = std::collections::HashSet::new();
        for (id, fv) in rows {
            if fv.names() != names.as_slice() {
                return Err(Error::SchemaMismatch {
                    missing: names
                        .iter()
                        .filter(|n| fv.get(n).is_none())
                        .cloned()
                        .collect(),
                });
            }
            if !seen.insert(id.clone()) {
                return Err(Error::InvalidParameter(format!("duplicate series id '{id}'")));
            }
            data.push(fv.values().to_vec());
            ids.push(id);
        }
        Ok(FeatureTable { series_ids: ids, names, rows: data })
    }

    pub fn series_ids(&self) -> &[String] {
        &self.series_ids
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn row_vector(&self, i: usize) -> FeatureVector {
        FeatureVector { names: self.names.clone(), values: self.rows[i].clone() }
    }

    /// Column projection preserving row order; `keep` must be a subset of
    /// the schema.
    pub fn restrict(&self, keep: &[String]) -> Result<FeatureTable> {
        let mut js = Vec::with_capacity(keep.len());
        let mut missing = Vec::new();
        for name in keep {
            match self.names.iter().position(|n| n == name) {
                Some(j) => js.push(j),
                None => missing.push(name.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(Error::SchemaMismatch { missing });
        }
        Ok(FeatureTable {
            series_ids: self.series_ids.clone(),
            names: keep.to_vec(),
            rows: self.rows.iter().map(|r| js.iter().map(|&j| r[j]).collect()).collect(),
        })
    }

    /// Wide CSV: `series_id` column then one column per feature.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["series_id".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.series_ids.iter().zip(&self.rows) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<FeatureTable> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = r.headers()?.clone();
        if header.is_empty() || &header[0] != "series_id" {
            return Err(Error::Format {
                line: 1,
                message: "first column must be series_id".into(),
            });
        }
        let names: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i as u64 + 2;
            if rec.len() != names.len() + 1 {
                return Err(Error::Format { line, message: "wrong field count".into() });
            }
            let id = rec[0].to_string();
            let mut values = Vec::with_capacity(names.len());
            for (j, field) in rec.iter().skip(1).enumerate() {
                let v: f64 = field.parse().map_err(|_| Error::Format {
                    line,
                    message: format!("feature '{}' is not a number: '{field}'", names[j]),
                })?;
                if !v.is_finite() {
                    return Err(Error::Format {
                        line,
                        message: format!("feature '{}' is not finite", names[j]),
                    });
                }
                values.push(v);
            }
            rows.push((id, FeatureVector { names: names.clone(), values }));
        }
        FeatureTable::from_rows(rows)
    }
}
