//! Forecast-output interchange: one JSON object per line.
//!
//! Each record carries the combined forecast, the audit trail needed to
//! reproduce it (per-method paths and the weights applied), and the interval
//! level, so `evaluate` can score points, intervals and the pool decomposition
//! from the file alone.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use featurecast::{metrics, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub series_id: String,
    pub horizon: usize,
    pub alpha: f64,
    /// Pool methods, in the order `weights` and `method_points` rows use.
    pub methods: Vec<String>,
    pub weights: Vec<f64>,
    /// Combined point forecast and central interval.
    pub points: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Per-method point paths; empty means the audit trail was stripped.
    pub method_points: Vec<Vec<f64>>,
    /// Methods replaced by naive on this series.
    pub substituted: Vec<String>,
}

impl ForecastRecord {
    pub fn validate(&self) -> Result<()> {
        let h = self.points.len();
        if h == 0 || self.horizon != h {
            return Err(Error::DimensionMismatch(format!(
                "series '{}': horizon {} vs {} forecast points",
                self.series_id, self.horizon, h
            )));
        }
        if self.lower.len() != h || self.upper.len() != h {
            return Err(Error::DimensionMismatch(format!(
                "series '{}': interval bounds do not match the horizon",
                self.series_id
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "series '{}': alpha must be in (0,1)",
                self.series_id
            )));
        }
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        if !finite(&self.points) || !finite(&self.lower) || !finite(&self.upper) {
            return Err(Error::InvalidParameter(format!(
                "series '{}': non-finite forecast values",
                self.series_id
            )));
        }
        for i in 0..h {
            if self.lower[i] > self.upper[i] {
                return Err(Error::InvalidParameter(format!(
                    "series '{}': lower bound above upper at step {}",
                    self.series_id,
                    i + 1
                )));
            }
        }
        if self.weights.len() != self.methods.len() {
            return Err(Error::DimensionMismatch(format!(
                "series '{}': {} weights vs {} methods",
                self.series_id,
                self.weights.len(),
                self.methods.len()
            )));
        }
        metrics::validate_weights(&self.weights)?;
        if !self.method_points.is_empty() {
            if self.method_points.len() != self.methods.len() {
                return Err(Error::DimensionMismatch(format!(
                    "series '{}': {} method paths vs {} methods",
                    self.series_id,
                    self.method_points.len(),
                    self.methods.len()
                )));
            }
            for row in &self.method_points {
                if row.len() != h || !finite(row) {
                    return Err(Error::DimensionMismatch(format!(
                        "series '{}': malformed method path",
                        self.series_id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One contained per-series failure inside a batch command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureRecord {
    pub series_id: String,
    /// Pipeline stage that rejected the series.
    pub stage: String,
    pub reason: String,
}

impl FailureRecord {
    pub fn new(series_id: &str, stage: &str, reason: impl std::fmt::Display) -> FailureRecord {
        FailureRecord {
            series_id: series_id.to_string(),
            stage: stage.to_string(),
            reason: reason.to_string(),
        }
    }
}

pub fn write_forecasts<W: Write>(mut writer: W, records: &[ForecastRecord]) -> Result<()> {
    for rec in records {
        let line = serde_json::to_string(rec)?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

pub fn read_forecasts<R: Read>(reader: R) -> Result<Vec<ForecastRecord>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = i as u64 + 1;
        if line.trim().is_empty() {
            return Err(Error::Format { line: lineno, message: "blank line".into() });
        }
        let rec: ForecastRecord = serde_json::from_str(&line).map_err(|e| Error::Format {
            line: lineno,
            message: e.to_string(),
        })?;
        rec.validate().map_err(|e| Error::Format { line: lineno, message: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_forecasts_path(path: &Path) -> Result<Vec<ForecastRecord>> {
    let file = std::fs::File::open(path)?;
    read_forecasts(file)
}
