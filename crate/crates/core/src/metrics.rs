//! Accuracy losses, the ambiguity decomposition of combination error, and
//! the evaluation report.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Checks a weight vector: finite, non-negative, sums to 1 within 1e-9.
pub fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidParameter("empty weight vector".into()));
    }
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidParameter(format!("invalid weight {w}")));
        }
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::WeightSum { sum });
    }
    Ok(())
}

fn check_same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "length {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

fn mse(forecast: &[f64], actual: &[f64]) -> f64 {
    forecast
        .iter()
        .zip(actual)
        .map(|(f, y)| (f - y) * (f - y))
        .sum::<f64>()
        / actual.len() as f64
}

/// Terms of the weighted-combination error identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseDecomposition {
    /// MSE of the weighted point forecast.
    pub combined: f64,
    /// Weighted average of member MSEs.
    pub weighted: f64,
    /// Pairwise diversity term subtracted from `weighted`.
    pub diversity: f64,
}

impl MseDecomposition {
    /// Identity residual; exact in real arithmetic.
    pub fn residual(&self) -> f64 {
        self.combined - (self.weighted - self.diversity)
    }
}

/// Splits combination MSE into the weighted member average minus pairwise
/// diversity. Exact identity, so `residual` is floating-point noise only.
pub fn mse_decomposition(
    points: &[Vec<f64>],
    weights: &[f64],
    actuals: &[f64],
) -> Result<MseDecomposition> {
    validate_weights(weights)?;
    if points.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} forecast rows vs {} weights",
            points.len(),
            weights.len()
        )));
    }
    let h = actuals.len();
    if h == 0 {
        return Err(Error::DimensionMismatch("empty actuals".into()));
    }
    for row in points {
        check_same_len(row, actuals)?;
    }

    let m = points.len();
    let combined_points: Vec<f64> = (0..h)
        .map(|k| (0..m).map(|i| weights[i] * points[i][k]).sum())
        .collect();
    let combined = mse(&combined_points, actuals);
    let weighted: f64 = (0..m).map(|i| weights[i] * mse(&points[i], actuals)).sum();
    let mut diversity = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let d: f64 = (0..h)
                .map(|k| {
                    let v = points[i][k] - points[j][k];
                    v * v
                })
                .sum::<f64>()
                / h as f64;
            diversity += weights[i] * weights[j] * d;
        }
    }
    Ok(MseDecomposition { combined, weighted, diversity })
}

/// Mean squared error of a pair's forecast difference, the building block
/// of the diversity term.
pub fn pairwise_msd(a: &[f64], b: &[f64]) -> Result<f64> {
    check_same_len(a, b)?;
    Ok(mse(a, b))
}

/// Root mean squared scaled error: forecast RMSE over the in-sample
/// one-step naive RMSE. Constant training history has no scale and errors.
pub fn rmsse(actuals: &[f64], forecasts: &[f64], history: &TimeSeries) -> Result<f64> {
    check_same_len(forecasts, actuals)?;
    let (_, msd) = crate::series::scale_stats(history)?;
    if msd <= 0.0 {
        return Err(Error::ZeroDenominator(format!(
            "constant training history for series '{}'",
            history.id()
        )));
    }
    Ok((mse(forecasts, actuals) / msd).sqrt())
}

/// Mean scaled interval score at level 1 - alpha, scaled by the in-sample
/// seasonal-naive MAE with season length `m`.
pub fn msis(
    actuals: &[f64],
    lower: &[f64],
    upper: &[f64],
    history: &TimeSeries,
    alpha: f64,
    m: usize,
) -> Result<f64> {
    check_same_len(lower, actuals)?;
    check_same_len(upper, actuals)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter("alpha must be in (0,1)".into()));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("season length must be >= 1".into()));
    }
    let y = history.values();
    let n = y.len();
    if n <= m {
        return Err(Error::SeriesTooShort {
            id: history.id().to_string(),
            needed: m + 1,
            got: n,
        });
    }
    let denom: f64 =
        (m..n).map(|t| (y[t] - y[t - m]).abs()).sum::<f64>() / (n - m) as f64;
    if denom <= 0.0 {
        return Err(Error::ZeroDenominator(format!(
            "seasonal-naive scale is zero for series '{}'",
            history.id()
        )));
    }
    let penalty = 2.0 / alpha;
    let mut total = 0.0;
    for k in 0..actuals.len() {
        let (l, u, y) = (lower[k], upper[k], actuals[k]);
        if l > u {
            return Err(Error::InvalidParameter(format!(
                "lower {l} above upper {u} at step {}",
                k + 1
            )));
        }
        total += u - l;
        if y < l {
            total += penalty * (l - y);
        }
        if y > u {
            total += penalty * (y - u);
        }
    }
    Ok(total / actuals.len() as f64 / denom)
}

/// Symmetric MAPE with both-zero steps contributing 0.
pub fn smape(actuals: &[f64], forecasts: &[f64]) -> Result<f64> {
    check_same_len(forecasts, actuals)?;
    let mut total = 0.0;
    for (&y, &f) in actuals.iter().zip(forecasts) {
        let denom = y.abs() + f.abs();
        if denom > 0.0 {
            total += 2.0 * (f - y).abs() / denom;
        }
    }
    Ok(100.0 * total / actuals.len() as f64)
}

/// Mean absolute scaled error against the in-sample seasonal-naive MAE
/// with the history's own period as season length.
pub fn mase(actuals: &[f64], forecasts: &[f64], history: &TimeSeries) -> Result<f64> {
    check_same_len(forecasts, actuals)?;
    let y = history.values();
    let m = history.period();
    let n = y.len();
    if n <= m {
        return Err(Error::SeriesTooShort {
            id: history.id().to_string(),
            needed: m + 1,
            got: n,
        });
    }
    let denom: f64 =
        (m..n).map(|t| (y[t] - y[t - m]).abs()).sum::<f64>() / (n - m) as f64;
    if denom <= 0.0 {
        return Err(Error::ZeroDenominator(format!(
            "seasonal-naive scale is zero for series '{}'",
            history.id()
        )));
    }
    let mae: f64 = actuals
        .iter()
        .zip(forecasts)
        .map(|(y, f)| (f - y).abs())
        .sum::<f64>()
        / actuals.len() as f64;
    Ok(mae / denom)
}

/// One evaluated (series, method, loss) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRow {
    pub series_id: String,
    pub method: String,
    pub loss: String,
    pub value: f64,
}

/// Decomposition diagnostics for one series' combined forecast.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub series_id: String,
    pub combined: f64,
    pub weighted: f64,
    pub diversity: f64,
    pub residual: f64,
}

/// Per-series losses plus aggregates, substitution flags and decomposition
/// diagnostics.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    /// (series_id, method) pairs where the method was replaced by naive.
    pub substitutions: Vec<(String, String)>,
    pub decompositions: Vec<DecompositionRow>,
    /// Series skipped with the reason (for example a zero loss denominator).
    pub skipped: Vec<(String, String)>,
}

impl EvalReport {
    /// Mean loss per (method, loss) pair, in first-appearance order.
    pub fn aggregates(&self) -> Vec<(String, String, f64)> {
        let mut order: Vec<(String, String)> = Vec::new();
        let mut sums: std::collections::HashMap<(String, String), (f64, usize)> =
            std::collections::HashMap::new();
        for row in &self.rows {
            let key = (row.method.clone(), row.loss.clone());
            if !sums.contains_key(&key) {
                order.push(key.clone());
            }
            let e = sums.entry(key).or_insert((0.0, 0));
            e.0 += row.value;
            e.1 += 1;
        }
        order
            .into_iter()
            .map(|key| {
                let (sum, n) = sums[&key];
                (key.0, key.1, sum / n as f64)
            })
            .collect()
    }

    /// Long CSV: `series_id,method,loss,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["series_id", "method", "loss", "value"])?;
        for row in &self.rows {
            w.write_record([
                row.series_id.as_str(),
                row.method.as_str(),
                row.loss.as_str(),
                &row.value.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Aggregate summary as a JSON document.
    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Aggregate<'a> {
            method: &'a str,
            loss: &'a str,
            mean: f64,
            count: usize,
        }
        #[derive(Serialize)]
        struct Summary<'a> {
            series_evaluated: usize,
            aggregates: Vec<Aggregate<'a>>,
            substitutions: &'a [(String, String)],
            skipped: &'a [(String, String)],
            max_decomposition_residual: f64,
        }
        let mut counts: std::collections::HashMap<(&str, &str), usize> =
            std::collections::HashMap::new();
        for row in &self.rows {
            *counts.entry((row.method.as_str(), row.loss.as_str())).or_insert(0) += 1;
        }
        let aggregates = self.aggregates();
        let series: std::collections::HashSet<&str> =
            self.rows.iter().map(|r| r.series_id.as_str()).collect();
        let summary = Summary {
            series_evaluated: series.len(),
            aggregates: aggregates
                .iter()
                .map(|(m, l, v)| Aggregate {
                    method: m,
                    loss: l,
                    mean: *v,
                    count: counts[&(m.as_str(), l.as_str())],
                })
                .collect(),
            substitutions: &self.substitutions,
            skipped: &self.skipped,
            max_decomposition_residual: self
                .decompositions
                .iter()
                .map(|d| d.residual.abs())
                .fold(0.0, f64::max),
        };
        Ok(serde_json::to_string_pretty(&summary)?)
    }
}
