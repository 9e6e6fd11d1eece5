//! Feature-based time-series forecasting toolkit: synthetic data
//! generation, a classical forecaster pool, scale-free features, pool
//! trimming and a tree-ensemble meta-learner, all reproducible from a
//! (seed, stream) pair.

pub mod error;
pub mod features;
pub mod generator;
pub mod io;
pub mod metalearn;
pub mod metrics;
pub mod pool;
pub mod rng;
pub mod series;
pub mod stats;
pub mod trimming;

pub use error::{Error, Result};
pub use features::{FeatureTable, FeatureVector, CATALOG};
pub use generator::{MarComponent, MarSpec};
pub use metalearn::{MetaModel, MetaParams, Mode, TrainingTable};
pub use pool::{ForecastBundle, Method, ALL_METHODS};
pub use rng::RngStream;
pub use series::{Dataset, SplitSeries, TimeSeries};
pub use trimming::{TrimConfig, TrimResult};
