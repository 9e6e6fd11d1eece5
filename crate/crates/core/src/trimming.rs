//! Pool trimming: robustness screening by Tukey fences and greedy removal
//! guided by accuracy-diversity trade-off.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pool::ForecastBundle;
use crate::stats;

/// Knobs for the trimming procedure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrimConfig {
    /// Diversity emphasis in [0, 1]; 0 ranks pools purely by accuracy.
    pub kappa: f64,
    /// Trimming never shrinks the pool below this.
    pub min_pool: usize,
    /// Stop when the relative trade-off reduction falls below this.
    pub significance_epsilon: f64,
}

impl Default for TrimConfig {
    fn default() -> Self {
        TrimConfig { kappa: 0.5, min_pool: 2, significance_epsilon: 0.01 }
    }
}

impl TrimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::InvalidParameter(format!(
                "kappa must be in [0,1], got {}",
                self.kappa
            )));
        }
        if self.min_pool < 2 {
            return Err(Error::InvalidParameter("min_pool must be >= 2".into()));
        }
        if !(self.significance_epsilon >= 0.0 && self.significance_epsilon.is_finite()) {
            return Err(Error::InvalidParameter(
                "significance_epsilon must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// One greedy removal with the trade-off value after it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemovalStep {
    pub removed: String,
    pub adt_after: f64,
}

/// Full trimming outcome; `kept` preserves roster order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrimResult {
    pub kept: Vec<String>,
    pub removed_by_robustness: Vec<String>,
    pub removal_trace: Vec<RemovalStep>,
    pub final_adt: f64,
}

/// Accuracy-diversity trade-off of a pool: mean MSE minus `kappa` times the
/// mean pairwise covariance-style term. Lower is better.
///
/// `msec[i][j]` must be symmetric with the pairwise cross-error means;
/// entries on the diagonal are ignored.
pub fn adt(mse: &[f64], msec: &[Vec<f64>], kappa: f64) -> Result<f64> {
    let m = mse.len();
    if m < 2 {
        return Err(Error::DegeneratePool);
    }
    if msec.len() != m || msec.iter().any(|row| row.len() != m) {
        return Err(Error::DimensionMismatch(format!("msec must be {m}x{m}")));
    }
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::InvalidParameter(format!("kappa must be in [0,1], got {kappa}")));
    }
    let avg_mse = stats::mean(mse);
    let mut cross = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            cross += msec[i][j];
        }
    }
    let avg_msec = cross / (m * m) as f64;
    Ok(avg_mse - kappa * avg_msec)
}

/// Flags indices whose value exceeds the upper Tukey fence
/// Q3 + 1.5 (Q3 - Q1). Returns (kept, removed), both in input order; never
/// removes so many that fewer than two remain.
pub fn tukey_upper_outliers(values: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let n = values.len();
    if n < 3 {
        return ((0..n).collect(), Vec::new());
    }
    let q1 = stats::quantile(values, 0.25);
    let q3 = stats::quantile(values, 0.75);
    let fence = q3 + 1.5 * (q3 - q1);
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if v > fence {
            removed.push(i);
        } else {
            kept.push(i);
        }
    }
    if kept.len() < 2 {
        // keep the two smallest values rather than empty the pool
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
        let mut keep: Vec<usize> = order.into_iter().take(2).collect();
        keep.sort_unstable();
        let removed = (0..n).filter(|i| !keep.contains(i)).collect();
        return (keep, removed);
    }
    (kept, removed)
}

/// Per-method error statistics aggregated over validation windows.
struct PoolErrors {
    methods: Vec<String>,
    /// Mean squared error per method, averaged over series.
    mse: Vec<f64>,
    /// Mean pairwise cross products of errors, averaged over series.
    msec: Vec<Vec<f64>>,
    /// Variance across series of each method's per-series MAE.
    mae_variance: Vec<f64>,
}

fn pool_errors(bundles: &[&ForecastBundle], actuals: &[&[f64]]) -> Result<PoolErrors> {
    if bundles.is_empty() || bundles.len() != actuals.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} bundles vs {} actual windows",
            bundles.len(),
            actuals.len()
        )));
    }
    let methods = bundles[0].methods.clone();
    let m = methods.len();
    if m < 2 {
        return Err(Error::DegeneratePool);
    }
    let n = bundles.len();
    let mut mse = vec![0.0; m];
    let mut msec = vec![vec![0.0; m]; m];
    let mut mae = vec![vec![0.0; n]; m];

    for (s, (&b, &y)) in bundles.iter().zip(actuals).enumerate() {
        if b.methods != methods {
            return Err(Error::RosterMismatch(format!(
                "bundle {s} roster differs from bundle 0"
            )));
        }
        let h = b.horizon();
        if y.len() != h {
            return Err(Error::DimensionMismatch(format!(
                "bundle {s}: horizon {h} vs {} actuals",
                y.len()
            )));
        }
        // per-method error paths for this series
        let errs: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..h).map(|k| b.points[i][k] - y[k]).collect())
            .collect();
        for i in 0..m {
            let e = &errs[i];
            mse[i] += e.iter().map(|v| v * v).sum::<f64>() / h as f64;
            mae[i][s] = e.iter().map(|v| v.abs()).sum::<f64>() / h as f64;
            for j in i + 1..m {
                let c: f64 =
                    e.iter().zip(&errs[j]).map(|(a, b)| a * b).sum::<f64>() / h as f64;
                msec[i][j] += c;
            }
        }
    }
    for v in &mut mse {
        *v /= n as f64;
    }
    for i in 0..m {
        for j in i + 1..m {
            msec[i][j] /= n as f64;
            msec[j][i] = msec[i][j];
        }
    }
    let mae_variance = mae.iter().map(|per_series| stats::variance(per_series)).collect();
    Ok(PoolErrors { methods, mse, msec, mae_variance })
}

fn adt_of_subset(errors: &PoolErrors, subset: &[usize], kappa: f64) -> Result<f64> {
    let mse: Vec<f64> = subset.iter().map(|&i| errors.mse[i]).collect();
    let msec: Vec<Vec<f64>> = subset
        .iter()
        .map(|&i| subset.iter().map(|&j| errors.msec[i][j]).collect())
        .collect();
    adt(&mse, &msec, kappa)
}

/// Trims a forecast pool in two stages: a Tukey-fence screen on the
/// cross-series variance of each method's absolute errors, then greedy
/// removal of whichever method most lowers the accuracy-diversity trade-off,
/// until the improvement is insignificant or the pool reaches `min_pool`.
///
/// All bundles must share one roster and pair with their validation actuals.
pub fn rad(
    bundles: &[&ForecastBundle],
    actuals: &[&[f64]],
    config: &TrimConfig,
) -> Result<TrimResult> {
    config.validate()?;
    let errors = pool_errors(bundles, actuals)?;
    let (kept_idx, removed_idx) = tukey_upper_outliers(&errors.mae_variance);
    let removed_by_robustness: Vec<String> =
        removed_idx.iter().map(|&i| errors.methods[i].clone()).collect();

    let mut pool: Vec<usize> = kept_idx;
    let mut trace = Vec::new();
    let mut current = adt_of_subset(&errors, &pool, config.kappa)?;

    while pool.len() > config.min_pool {
        // candidate trade-off after removing each member
        let mut best: Option<(f64, usize)> = None;
        for (pos, _) in pool.iter().enumerate() {
            let subset: Vec<usize> = pool
                .iter()
                .enumerate()
                .filter(|&(q, _)| q != pos)
                .map(|(_, &i)| i)
                .collect();
            let value = adt_of_subset(&errors, &subset, config.kappa)?;
            let better = match best {
                None => true,
                Some((bv, bpos)) => {
                    let tol = 1e-9 * (1.0 + bv.abs());
                    if value < bv - tol {
                        true
                    } else if value <= bv + tol {
                        // tie: drop the higher-MSE member; then the later one
                        let (ci, bi) = (pool[pos], pool[bpos]);
                        errors.mse[ci] > errors.mse[bi]
                            || (errors.mse[ci] == errors.mse[bi] && ci > bi)
                    } else {
                        false
                    }
                }
            };
            if better {
                best = Some((value, pos));
            }
        }
        let Some((best_value, best_pos)) = best else { break };
        let reduction = (current - best_value) / current.abs().max(1e-12);
        if reduction < config.significance_epsilon {
            break;
        }
        let removed = pool.remove(best_pos);
        trace.push(RemovalStep {
            removed: errors.methods[removed].clone(),
            adt_after: best_value,
        });
        current = best_value;
    }

    Ok(TrimResult {
        kept: pool.into_iter().map(|i| errors.methods[i].clone()).collect(),
        removed_by_robustness,
        removal_trace: trace,
        final_adt: current,
    })
}
