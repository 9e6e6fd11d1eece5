//! Core domain types: series, splits, datasets.
//!
//! All types are immutable after construction and validate their invariants
//! up front, so downstream code can assume finite values and sufficient
//! history without re-checking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single univariate time series.
///
/// `period` is the number of observations per seasonal cycle; 1 means
/// non-seasonal. Values are complete (no missing observations) and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    id: String,
    period: usize,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, period: usize, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if period == 0 {
            return Err(Error::InvalidParameter(format!(
                "series '{id}': period must be >= 1"
            )));
        }
        if values.is_empty() {
            return Err(Error::SeriesTooShort { id, needed: 1, got: 0 });
        }
        if let Some(ix) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { id, index: ix });
        }
        Ok(Self { id, period, values })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same series under a new id.
    pub fn with_id(&self, id: impl Into<String>) -> TimeSeries {
        TimeSeries { id: id.into(), period: self.period, values: self.values.clone() }
    }

    /// Minimum history needed to fit every pool method at this period.
    pub fn min_history(period: usize) -> usize {
        2 * period + 3
    }

    /// Minimum total length required to split off `horizon` validation points
    /// and still leave a fittable training part.
    pub fn min_total_length(period: usize, horizon: usize) -> usize {
        horizon + Self::min_history(period)
    }
}

/// A series divided into a training part and a held-out validation window.
#[derive(Debug, Clone)]
pub struct SplitSeries {
    pub train: TimeSeries,
    pub validation: Vec<f64>,
}

/// Splits off the last `horizon` observations as the validation window.
pub fn split(series: &TimeSeries, horizon: usize) -> Result<SplitSeries> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    let needed = TimeSeries::min_total_length(series.period(), horizon);
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            id: series.id().to_string(),
            needed,
            got: series.len(),
        });
    }
    let cut = series.len() - horizon;
    let train = TimeSeries::new(series.id(), series.period(), series.values()[..cut].to_vec())?;
    Ok(SplitSeries { train, validation: series.values()[cut..].to_vec() })
}

/// Mean of the series and the mean square of its first differences
/// (the scaling denominator used by scaled error metrics).
pub fn scale_stats(series: &TimeSeries) -> Result<(f64, f64)> {
    let v = series.values();
    if v.len() < 2 {
        return Err(Error::DegenerateSeries {
            id: series.id().to_string(),
            reason: "needs at least 2 observations for first differences".into(),
        });
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let msd = v.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    Ok((mean, msd))
}

/// A collection of series plus the forecast horizon they will be evaluated
/// at. Ids are unique and every series is long enough to split.
#[derive(Debug, Clone)]
pub struct Dataset {
    series: Vec<TimeSeries>,
    horizon: usize,
}

impl Dataset {
    pub fn new(series: Vec<TimeSeries>, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for s in &series {
            if !seen.insert(s.id().to_string()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate series id '{}'",
                    s.id()
                )));
            }
            let needed = TimeSeries::min_total_length(s.period(), horizon);
            if s.len() < needed {
                return Err(Error::SeriesTooShort {
                    id: s.id().to_string(),
                    needed,
                    got: s.len(),
                });
            }
        }
        Ok(Self { series, horizon })
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}
