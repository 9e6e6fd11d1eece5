//! Synthetic series generation from mixture-autoregressive processes,
//! including multi-seasonal aggregation and dataset assembly.

pub mod ga;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::series::{Dataset, TimeSeries};

/// Absolute values beyond this abort a simulation as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Divergent draws per series before dataset generation gives up.
pub const MAX_RETRIES: usize = 100;

/// One autoregressive mixture component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarComponent {
    pub intercept: f64,
    /// Lag coefficients, index j holding the lag j+1 weight.
    pub coeffs: Vec<f64>,
    pub sigma: f64,
}

/// A mixture-autoregressive process: at every step one component is drawn
/// by weight and emits the next value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarSpec {
    pub weights: Vec<f64>,
    pub components: Vec<MarComponent>,
}

impl MarSpec {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn max_order(&self) -> usize {
        self.components.iter().map(|c| c.coeffs.len()).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidParameter("spec needs >= 1 component".into()));
        }
        if self.weights.len() != self.components.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights vs {} components",
                self.weights.len(),
                self.components.len()
            )));
        }
        let mut sum = 0.0;
        for &w in &self.weights {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidParameter(format!("mixture weight {w}")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::WeightSum { sum });
        }
        for (i, c) in self.components.iter().enumerate() {
            if c.coeffs.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "component {i} has no lag coefficients"
                )));
            }
            if !(c.sigma.is_finite() && c.sigma > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "component {i} sigma {}",
                    c.sigma
                )));
            }
            if !c.intercept.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "component {i} has non-finite parameters"
                )));
            }
        }
        Ok(())
    }
}

/// Burn-in long enough to wash out the zero-initialized state.
pub fn default_burn_in(spec: &MarSpec) -> usize {
    50 + spec.max_order()
}

/// Draws a random spec: exponential stick weights, uniform orders in
/// [1, max_order], lag coefficients shrinking with depth, log-normal noise
/// scale.
pub fn sample_mar_spec(rng: &mut RngStream, components: usize, max_order: usize) -> MarSpec {
    assert!(components >= 1 && max_order >= 1);
    let weights = if components == 1 {
        vec![1.0]
    } else {
        let raw: Vec<f64> = (0..components)
            .map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-9)
            .collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / sum).collect()
    };
    let comps = (0..components)
        .map(|_| {
            let order = rng.random_range(1..=max_order);
            let intercept = Normal::new(0.0, 2f64.sqrt()).unwrap().sample(rng);
            let coeffs = (1..=order)
                .map(|j| {
                    // prior variance 0.5/j keeps deep lags weak
                    Normal::new(0.0, (0.5 / j as f64).sqrt()).unwrap().sample(rng)
                })
                .collect();
            let sigma = {
                let z: f64 = rng.sample(StandardNormal);
                z.exp()
            };
            MarComponent { intercept, coeffs, sigma }
        })
        .collect();
    MarSpec { weights, components: comps }
}

/// Core recursion; pre-sample lags read as zero, burn-in is discarded.
pub(crate) fn simulate_values(
    spec: &MarSpec,
    length: usize,
    burn_in: usize,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    let total = burn_in + length;
    let mut x: Vec<f64> = Vec::with_capacity(total);
    for t in 0..total {
        let u: f64 = rng.random();
        let mut pick = spec.components.len() - 1;
        let mut acc = 0.0;
        for (i, w) in spec.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = i;
                break;
            }
        }
        let c = &spec.components[pick];
        let mut next = c.intercept;
        for (j, phi) in c.coeffs.iter().enumerate() {
            if t > j {
                next += phi * x[t - j - 1];
            }
        }
        let z: f64 = rng.sample(StandardNormal);
        next += c.sigma * z;
        if !next.is_finite() || next.abs() > DIVERGENCE_THRESHOLD {
            return Err(Error::SimulationDiverged { step: t, threshold: DIVERGENCE_THRESHOLD });
        }
        x.push(next);
    }
    x.drain(..burn_in);
    Ok(x)
}

/// Simulates one non-seasonal series of `length` observations.
pub fn simulate(
    spec: &MarSpec,
    length: usize,
    burn_in: usize,
    rng: &mut RngStream,
) -> Result<TimeSeries> {
    spec.validate()?;
    if length == 0 {
        return Err(Error::InvalidParameter("length must be >= 1".into()));
    }
    TimeSeries::new("sim", 1, simulate_values(spec, length, burn_in, rng)?)
}

/// One seasonal layer of a multi-seasonal process.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeasonalLayer {
    pub spec: MarSpec,
    pub period: usize,
    pub weight: f64,
}

/// Weighted sum of per-frequency MAR processes; the resulting series
/// carries the longest period.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiSeasonalSpec {
    pub layers: Vec<SeasonalLayer>,
}

impl MultiSeasonalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidParameter("needs >= 1 layer".into()));
        }
        let mut sum = 0.0;
        for (i, l) in self.layers.iter().enumerate() {
            l.spec.validate()?;
            if l.period == 0 {
                return Err(Error::InvalidParameter(format!("layer {i} period 0")));
            }
            if !(l.weight.is_finite() && l.weight > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "layer {i} weight {}",
                    l.weight
                )));
            }
            sum += l.weight;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::WeightSum { sum });
        }
        Ok(())
    }
}

/// Layer weights from uniform draws normalized to sum 1; draws are shifted
/// off zero so every weight is strictly positive.
pub fn sample_seasonal_weights(rng: &mut RngStream, layers: usize) -> Vec<f64> {
    assert!(layers >= 1);
    let raw: Vec<f64> = (0..layers).map(|_| 1.0 - rng.random::<f64>()).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Simulates each layer independently and aggregates by layer weight.
pub fn simulate_multi_seasonal(
    spec: &MultiSeasonalSpec,
    length: usize,
    rng: &mut RngStream,
) -> Result<TimeSeries> {
    spec.validate()?;
    if length == 0 {
        return Err(Error::InvalidParameter("length must be >= 1".into()));
    }
    let period = spec.layers.iter().map(|l| l.period).max().unwrap();
    let mut agg = vec![0.0; length];
    for layer in &spec.layers {
        let vals = simulate_values(&layer.spec, length, default_burn_in(&layer.spec), rng)?;
        for (a, v) in agg.iter_mut().zip(vals) {
            *a += layer.weight * v;
        }
    }
    TimeSeries::new("sim", period, agg)
}

/// Generates `count` independent series with lengths uniform in
/// `length_range`, ready to split at `horizon`.
///
/// Each series owns a derived random stream, so the result is identical
/// for any worker count, and divergent parameter draws are retried up to
/// [`MAX_RETRIES`] times.
pub fn generate_dataset(
    count: usize,
    length_range: (usize, usize),
    period: usize,
    components: usize,
    horizon: usize,
    rng: &RngStream,
) -> Result<Dataset> {
    let (lo, hi) = length_range;
    if count == 0 {
        return Err(Error::InvalidParameter("count must be >= 1".into()));
    }
    if lo > hi {
        return Err(Error::InvalidParameter(format!("bad length range [{lo}, {hi}]")));
    }
    if components == 0 {
        return Err(Error::InvalidParameter("components must be >= 1".into()));
    }
    let min_len = TimeSeries::min_total_length(period, horizon);
    if lo < min_len {
        return Err(Error::SeriesTooShort {
            id: "length_range".into(),
            needed: min_len,
            got: lo,
        });
    }
    // seasonal processes need lags reaching one season back
    let max_order = period.max(2);
    let burn_in = 50 + max_order;

    let series = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.derive(i as u64);
            let length = stream.random_range(lo..=hi);
            for _ in 0..MAX_RETRIES {
                let spec = sample_mar_spec(&mut stream, components, max_order);
                match simulate_values(&spec, length, burn_in, &mut stream) {
                    Ok(values) => {
                        return TimeSeries::new(format!("gen{i:05}"), period, values)
                    }
                    Err(Error::SimulationDiverged { .. }) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::RetryExhausted { attempts: MAX_RETRIES })
        })
        .collect::<Result<Vec<_>>>()?;

    Dataset::new(series, horizon)
}
