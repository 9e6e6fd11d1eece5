//! Feature screening: variance prefilter, RReliefF quality scores and
//! correlation clustering with one representative per cluster.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::rng::RngStream;
use crate::stats;
use rand::Rng;

/// Features whose standard deviation falls below this carry no signal.
pub const PREFILTER_SD_FLOOR: f64 = 1e-8;

/// Complete-linkage clusters are cut at this correlation distance.
pub const CLUSTER_CUT: f64 = 0.2;

/// Drops near-constant columns: standard deviation below
/// [`PREFILTER_SD_FLOOR`] or coinciding 10th/90th percentiles. Survivors
/// keep their schema order.
pub fn prefilter(table: &FeatureTable) -> Result<Vec<String>> {
    if table.n_rows() < 2 {
        return Err(Error::TooFewRows { needed: 2, got: table.n_rows() });
    }
    let mut surviving = Vec::new();
    for name in table.names() {
        let col = table.column(name).unwrap();
        let sd = stats::sample_std(&col);
        if sd < PREFILTER_SD_FLOOR {
            continue;
        }
        let p10 = stats::quantile(&col, 0.1);
        let p90 = stats::quantile(&col, 0.9);
        if (p90 - p10).abs() <= 1e-12 * (1.0 + p90.abs()) {
            continue;
        }
        surviving.push(name.clone());
    }
    if surviving.is_empty() {
        return Err(Error::EmptySurvivors);
    }
    Ok(surviving)
}

/// Z-scores every column; near-constant columns (which the prefilter
/// removes) map to zeros rather than blowing up.
pub fn zscore_columns(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = rows.len();
    if n == 0 {
        return Vec::new();
    }
    let p = rows[0].len();
    let mut out = vec![vec![0.0; p]; n];
    for j in 0..p {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let m = stats::mean(&col);
        let sd = stats::sample_std(&col);
        if sd < PREFILTER_SD_FLOOR {
            continue;
        }
        for i in 0..n {
            out[i][j] = (rows[i][j] - m) / sd;
        }
    }
    out
}

/// RReliefF relevance scores against a continuous target.
///
/// Uses the standard three-accumulator form with exponentially decayed
/// neighbor influence; scores land in [-1, 1] and identical columns get
/// identical scores. `sample_count` instance draws come from `rng`, so the
/// result is deterministic per stream.
pub fn rrelieff(
    table: &FeatureTable,
    target: &[f64],
    k: usize,
    sample_count: usize,
    rng: &mut RngStream,
) -> Result<BTreeMap<String, f64>> {
    let n = table.n_rows();
    if target.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} rows vs {} target values",
            target.len()
        )));
    }
    if k == 0 || sample_count == 0 {
        return Err(Error::InvalidParameter("k and sample_count must be >= 1".into()));
    }
    if n < k + 2 {
        return Err(Error::TooFewRows { needed: k + 2, got: n });
    }
    for (i, v) in target.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite { id: format!("target[{i}]"), index: i });
        }
    }

    let x = zscore_columns(table.rows());
    let p = table.names().len();

    let col_range = |j: usize| -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &x {
            lo = lo.min(row[j]);
            hi = hi.max(row[j]);
        }
        hi - lo
    };
    let ranges: Vec<f64> = (0..p).map(col_range).collect();
    let t_lo = target.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_hi = target.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let t_range = t_hi - t_lo;

    let mut n_dc = 0.0;
    let mut n_df = vec![0.0; p];
    let mut n_dcdf = vec![0.0; p];

    // rank-decay weights, normalized per instance
    let sigma = (k as f64 / 3.0).max(1.0);
    let decay: Vec<f64> = (1..=k)
        .map(|r| (-((r as f64) / sigma).powi(2)).exp())
        .collect();
    let decay_sum: f64 = decay.iter().sum();

    for _ in 0..sample_count {
        let r = rng.random_range(0..n);
        let mut dists: Vec<(f64, usize)> = (0..n)
            .filter(|&i| i != r)
            .map(|i| {
                let d: f64 = (0..p).map(|j| (x[r][j] - x[i][j]).powi(2)).sum();
                (d.sqrt(), i)
            })
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

        for (rank, &(_, i)) in dists.iter().take(k).enumerate() {
            let w = decay[rank] / decay_sum;
            let dt = if t_range > 0.0 { (target[r] - target[i]).abs() / t_range } else { 0.0 };
            n_dc += dt * w;
            for j in 0..p {
                if ranges[j] <= 0.0 {
                    continue;
                }
                let df = (x[r][j] - x[i][j]).abs() / ranges[j];
                n_df[j] += df * w;
                n_dcdf[j] += dt * df * w;
            }
        }
    }

    let m = sample_count as f64;
    let mut scores = BTreeMap::new();
    for (j, name) in table.names().iter().enumerate() {
        let hit = if n_dc > 0.0 { n_dcdf[j] / n_dc } else { 0.0 };
        let miss = if m - n_dc > 0.0 { (n_df[j] - n_dcdf[j]) / (m - n_dc) } else { 0.0 };
        scores.insert(name.clone(), (hit - miss).clamp(-1.0, 1.0));
    }
    Ok(scores)
}

/// Outcome of the redundancy-reduction step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionReport {
    /// Features that survived the prefilter, schema order.
    pub surviving: Vec<String>,
    /// RReliefF score per surviving feature.
    pub quality: BTreeMap<String, f64>,
    /// Complete-linkage clusters at the cut, each sorted by schema order.
    pub clusters: Vec<Vec<String>>,
    /// One representative per cluster (highest quality; schema order breaks
    /// ties), in cluster order.
    pub chosen: Vec<String>,
}

/// Clusters the table's features by the distance 1 - |pearson| under
/// complete linkage, cuts at [`CLUSTER_CUT`], and keeps the highest-quality
/// member of each cluster.
pub fn cluster_select(
    table: &FeatureTable,
    quality: &BTreeMap<String, f64>,
) -> Result<SelectionReport> {
    let names = table.names();
    let p = names.len();
    if p == 0 {
        return Err(Error::EmptySurvivors);
    }
    for name in names {
        if !quality.contains_key(name) {
            return Err(Error::SchemaMismatch { missing: vec![name.clone()] });
        }
    }

    let cols: Vec<Vec<f64>> = names.iter().map(|n| table.column(n).unwrap()).collect();
    let mut dist = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in i + 1..p {
            let d = 1.0 - stats::pearson(&cols[i], &cols[j]).abs();
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }

    // agglomerative complete linkage; clusters held as sorted index lists,
    // merge candidates scanned in lexicographic order so ties are stable
    let mut clusters: Vec<Vec<usize>> = (0..p).map(|i| vec![i]).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut link = f64::NEG_INFINITY;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        link = link.max(dist[i][j]);
                    }
                }
                if best.is_none_or(|(d, _, _)| link < d) {
                    best = Some((link, a, b));
                }
            }
        }
        match best {
            Some((d, a, b)) if d <= CLUSTER_CUT => {
                let merged = clusters.remove(b);
                clusters[a].extend(merged);
                clusters[a].sort_unstable();
                clusters.sort_by_key(|c| c[0]);
            }
            _ => break,
        }
    }

    let mut cluster_names = Vec::with_capacity(clusters.len());
    let mut chosen = Vec::with_capacity(clusters.len());
    for c in &clusters {
        let members: Vec<String> = c.iter().map(|&i| names[i].clone()).collect();
        let mut best_i = c[0];
        for &i in &c[1..] {
            if quality[&names[i]] > quality[&names[best_i]] {
                best_i = i;
            }
        }
        chosen.push(names[best_i].clone());
        cluster_names.push(members);
    }

    Ok(SelectionReport {
        surviving: names.to_vec(),
        quality: names
            .iter()
            .map(|n| (n.clone(), quality[n]))
            .collect(),
        clusters: cluster_names,
        chosen,
    })
}
