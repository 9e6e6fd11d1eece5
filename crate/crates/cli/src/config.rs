//! Pipeline configuration: one JSON document shared by every command.
//!
//! Missing keys take defaults, unknown keys are rejected, and the effective
//! config (after CLI-flag overrides) is echoed into each output directory so
//! a run can be reproduced from its artifacts alone.

use std::path::Path;

use serde::{Deserialize, Serialize};

use featurecast::generator::ga::GaConfig;
use featurecast::metalearn::{FeatureSource, LossKind, MetaParams, Mode};
use featurecast::pool::{self, Method, ALL_METHODS};
use featurecast::series::TimeSeries;
use featurecast::trimming::TrimConfig;
use featurecast::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Steps forecast and evaluated beyond each series' end.
    pub horizon: usize,
    /// Central interval miss rate; intervals cover 1 - alpha.
    pub alpha: f64,
    /// Master seed; every random stage derives from it.
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    /// Candidate method names, in pool order.
    pub roster: Vec<String>,
    pub feature_source: FeatureSource,
    pub loss: LossKind,
    pub trim: TrimSection,
    pub metalearn: MetaSection,
    pub generator: GeneratorSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            horizon: 8,
            alpha: 0.05,
            seed: 0,
            workers: 0,
            roster: ALL_METHODS.iter().map(|m| m.name().to_string()).collect(),
            feature_source: FeatureSource::Historical,
            loss: LossKind::Rmsse,
            trim: TrimSection::default(),
            metalearn: MetaSection::default(),
            generator: GeneratorSection::default(),
        }
    }
}

/// Pool-trimming stage; off by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrimSection {
    pub enabled: bool,
    pub kappa: f64,
    pub min_pool: usize,
    pub significance_epsilon: f64,
}

impl Default for TrimSection {
    fn default() -> Self {
        let core = TrimConfig::default();
        TrimSection {
            enabled: false,
            kappa: core.kappa,
            min_pool: core.min_pool,
            significance_epsilon: core.significance_epsilon,
        }
    }
}

impl TrimSection {
    pub fn to_core(&self) -> TrimConfig {
        TrimConfig {
            kappa: self.kappa,
            min_pool: self.min_pool,
            significance_epsilon: self.significance_epsilon,
        }
    }
}

/// Meta-learner hyperparameters; mirrors [`MetaParams`] with serde defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaSection {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub feature_subsample: Option<usize>,
    pub row_subsample: f64,
    pub mode: Mode,
    pub log_transform: bool,
}

impl Default for MetaSection {
    fn default() -> Self {
        let p = MetaParams::default();
        MetaSection {
            trees: p.trees,
            max_depth: p.max_depth,
            min_leaf: p.min_leaf,
            feature_subsample: p.feature_subsample,
            row_subsample: p.row_subsample,
            mode: p.mode,
            log_transform: p.log_transform,
        }
    }
}

impl MetaSection {
    pub fn to_params(&self) -> MetaParams {
        MetaParams {
            trees: self.trees,
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            feature_subsample: self.feature_subsample,
            row_subsample: self.row_subsample,
            mode: self.mode,
            log_transform: self.log_transform,
        }
    }
}

/// Synthetic-dataset settings for `generate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSection {
    pub count: usize,
    pub length_min: usize,
    pub length_max: usize,
    pub period: usize,
    /// Mixture components per sampled process.
    pub components: usize,
    pub ga: GaConfig,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        GeneratorSection {
            count: 100,
            length_min: 72,
            length_max: 144,
            period: 1,
            components: 2,
            ga: GaConfig::default(),
        }
    }
}

/// CLI flags that override config keys; `None` leaves the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub horizon: Option<usize>,
    pub roster: Option<Vec<String>>,
    pub trim: Option<bool>,
    pub count: Option<usize>,
    pub period: Option<usize>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let raw = std::fs::read_to_string(path)?;
        let cfg: PipelineConfig = serde_json::from_str(&raw)?;
        Ok(cfg)
    }

    /// File config (or defaults) with CLI overrides applied on top.
    pub fn effective(path: Option<&Path>, over: &Overrides) -> Result<PipelineConfig> {
        let mut cfg = match path {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = over.seed {
            cfg.seed = seed;
        }
        if let Some(workers) = over.workers {
            cfg.workers = workers;
        }
        if let Some(horizon) = over.horizon {
            cfg.horizon = horizon;
        }
        if let Some(roster) = &over.roster {
            cfg.roster = roster.clone();
        }
        if let Some(trim) = over.trim {
            cfg.trim.enabled = trim;
        }
        if let Some(count) = over.count {
            cfg.generator.count = count;
        }
        if let Some(period) = over.period {
            cfg.generator.period = period;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be in (0,1), got {}",
                self.alpha
            )));
        }
        self.roster_methods()?;
        if self.trim.enabled {
            self.trim.to_core().validate()?;
        }
        let m = &self.metalearn;
        if m.trees == 0 {
            return Err(Error::InvalidParameter("metalearn.trees must be >= 1".into()));
        }
        if m.min_leaf == 0 {
            return Err(Error::InvalidParameter("metalearn.min_leaf must be >= 1".into()));
        }
        if !(m.row_subsample > 0.0 && m.row_subsample <= 1.0) {
            return Err(Error::InvalidParameter(
                "metalearn.row_subsample must be in (0,1]".into(),
            ));
        }
        if m.feature_subsample == Some(0) {
            return Err(Error::InvalidParameter(
                "metalearn.feature_subsample must be >= 1 when set".into(),
            ));
        }
        let g = &self.generator;
        if g.period == 0 {
            return Err(Error::InvalidParameter("generator.period must be >= 1".into()));
        }
        if g.count == 0 {
            return Err(Error::InvalidParameter("generator.count must be >= 1".into()));
        }
        if g.components == 0 {
            return Err(Error::InvalidParameter("generator.components must be >= 1".into()));
        }
        if g.length_min > g.length_max {
            return Err(Error::InvalidParameter(format!(
                "generator length range [{}, {}] is empty",
                g.length_min, g.length_max
            )));
        }
        let need = TimeSeries::min_total_length(g.period, self.horizon);
        if g.length_min < need {
            return Err(Error::InvalidParameter(format!(
                "generator.length_min {} is below the minimum usable length {} \
                 for period {} and horizon {}",
                g.length_min, need, g.period, self.horizon
            )));
        }
        Ok(())
    }

    pub fn roster_methods(&self) -> Result<Vec<Method>> {
        pool::parse_roster(&self.roster)
    }

    /// Writes the effective config into `dir` as `config.json`.
    pub fn echo(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(dir.join("config.json"), text)?;
        Ok(())
    }
}
