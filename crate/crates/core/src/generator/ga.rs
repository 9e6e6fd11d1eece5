//! Genetic tuning of MAR parameters toward a target feature vector.
//!
//! Candidates are full specs with every component padded to a common lag
//! order, so blend crossover and Gaussian mutation are well defined. Fitness
//! is the Euclidean distance between the target and the candidate's mean
//! feature vector over a fixed number of simulations, each driven by a
//! derived stream keyed on (generation, slot), which makes runs
//! reproducible and worker-count independent.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{self, FeatureVector};
use crate::generator::{sample_mar_spec, simulate_values, MarSpec};
use crate::rng::RngStream;
use crate::series::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Simulations averaged per fitness evaluation.
    pub samples_per_candidate: usize,
    pub crossover_rate: f64,
    /// Scale of Gaussian parameter perturbations.
    pub mutation_scale: f64,
    pub tournament: usize,
    pub components: usize,
    /// Common lag order; None means max(2, period).
    pub max_order: Option<usize>,
    /// Distance at or below which the search counts as converged.
    pub tolerance: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 24,
            generations: 40,
            samples_per_candidate: 4,
            crossover_rate: 0.9,
            mutation_scale: 0.1,
            tournament: 3,
            components: 2,
            max_order: None,
            tolerance: 0.1,
        }
    }
}

impl GaConfig {
    fn validate(&self, target: &FeatureVector) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::InvalidParameter("population_size must be >= 4".into()));
        }
        if self.generations == 0 || self.samples_per_candidate == 0 {
            return Err(Error::InvalidParameter(
                "generations and samples_per_candidate must be >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::InvalidParameter("crossover_rate must be in [0,1]".into()));
        }
        if !(self.mutation_scale > 0.0 && self.mutation_scale.is_finite()) {
            return Err(Error::InvalidParameter("mutation_scale must be > 0".into()));
        }
        if self.tournament < 2 {
            return Err(Error::InvalidParameter("tournament must be >= 2".into()));
        }
        if self.components == 0 {
            return Err(Error::InvalidParameter("components must be >= 1".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidParameter("tolerance must be >= 0".into()));
        }
        if target.is_empty() {
            return Err(Error::InvalidParameter("target features empty".into()));
        }
        for name in target.names() {
            if !features::CATALOG.contains(&name.as_str()) {
                return Err(Error::UnknownFeature(name.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaOutcome {
    pub spec: MarSpec,
    /// Final distance to the target.
    pub distance: f64,
    pub converged: bool,
    /// Best-so-far distance after initialization and after each generation.
    pub best_history: Vec<f64>,
}

/// Searches for a spec whose simulated series match `target`.
pub fn ga_search(
    config: &GaConfig,
    target: &FeatureVector,
    period: usize,
    length: usize,
    rng: &RngStream,
) -> Result<GaOutcome> {
    config.validate(target)?;
    if period == 0 {
        return Err(Error::InvalidParameter("period must be >= 1".into()));
    }
    let needed = TimeSeries::min_history(period);
    if length < needed {
        return Err(Error::SeriesTooShort { id: "ga".into(), needed, got: length });
    }
    let max_order = config.max_order.unwrap_or(period.max(2));
    let burn_in = 50 + max_order;
    let pop_size = config.population_size;

    let mut breed_rng = rng.derive(1);
    let eval_base = rng.derive(2);

    let evaluate = |pop: &[MarSpec], gen: usize| -> Vec<f64> {
        pop.par_iter()
            .enumerate()
            .map(|(idx, spec)| {
                let mut stream =
                    eval_base.derive(((gen as u64) << 32) | idx as u64);
                fitness(spec, target, period, length, burn_in,
                        config.samples_per_candidate, &mut stream)
            })
            .collect()
    };

    let mut population: Vec<MarSpec> = (0..pop_size)
        .map(|_| padded_spec(&mut breed_rng, config.components, max_order))
        .collect();
    let mut fitnesses = evaluate(&population, 0);

    let mut best_idx = argmin(&fitnesses);
    let mut best_spec = population[best_idx].clone();
    let mut best_fit = fitnesses[best_idx];
    let mut best_history = vec![best_fit];

    for gen in 1..=config.generations {
        let mut next = Vec::with_capacity(pop_size);
        // elitism pins the incumbent, making the history non-increasing
        next.push(best_spec.clone());
        while next.len() < pop_size {
            let a = tournament_pick(&fitnesses, config.tournament, &mut breed_rng);
            let child = if breed_rng.random::<f64>() < config.crossover_rate {
                let b = tournament_pick(&fitnesses, config.tournament, &mut breed_rng);
                blend(&population[a], &population[b], breed_rng.random::<f64>())
            } else {
                population[a].clone()
            };
            next.push(mutate(child, config.mutation_scale, &mut breed_rng));
        }
        population = next;
        fitnesses = evaluate(&population, gen);
        // slot 0 is the unmodified elite; re-use its stored fitness so
        // resampling noise cannot inflate it
        fitnesses[0] = best_fit;

        best_idx = argmin(&fitnesses);
        if fitnesses[best_idx] < best_fit {
            best_fit = fitnesses[best_idx];
            best_spec = population[best_idx].clone();
        }
        best_history.push(best_fit);
    }

    Ok(GaOutcome {
        spec: best_spec,
        distance: best_fit,
        converged: best_fit <= config.tolerance,
        best_history,
    })
}

/// Mean-feature distance to the target; divergent simulations are scored
/// as infinitely unfit rather than propagating an error.
fn fitness(
    spec: &MarSpec,
    target: &FeatureVector,
    period: usize,
    length: usize,
    burn_in: usize,
    samples: usize,
    rng: &mut RngStream,
) -> f64 {
    let mut sums = vec![0.0; target.len()];
    for _ in 0..samples {
        let Ok(values) = simulate_values(spec, length, burn_in, rng) else {
            return f64::INFINITY;
        };
        let Ok(series) = TimeSeries::new("cand", period, values) else {
            return f64::INFINITY;
        };
        let Ok(fv) = features::extract(&series) else {
            return f64::INFINITY;
        };
        for (s, name) in sums.iter_mut().zip(target.names()) {
            *s += fv.get(name).expect("catalog feature");
        }
    }
    let mut dist2 = 0.0;
    for (s, t) in sums.iter().zip(target.values()) {
        let d = s / samples as f64 - t;
        dist2 += d * d;
    }
    dist2.sqrt()
}

/// Random spec with every component's lag vector padded to `max_order`.
fn padded_spec(rng: &mut RngStream, components: usize, max_order: usize) -> MarSpec {
    let mut spec = sample_mar_spec(rng, components, max_order);
    for c in &mut spec.components {
        c.coeffs.resize(max_order, 0.0);
    }
    spec
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Tournament selection: best of `k` uniform draws, ties to the earlier
/// draw via strict comparison in `argmin` order.
fn tournament_pick(fitnesses: &[f64], k: usize, rng: &mut RngStream) -> usize {
    let n = fitnesses.len();
    let mut best = rng.random_range(0..n);
    for _ in 1..k {
        let c = rng.random_range(0..n);
        if fitnesses[c] < fitnesses[best] {
            best = c;
        }
    }
    best
}

/// Arithmetic blend of two same-shape specs; mixture weights renormalize
/// and noise scales blend on the log axis to stay positive.
fn blend(a: &MarSpec, b: &MarSpec, lambda: f64) -> MarSpec {
    let mix = |x: f64, y: f64| lambda * x + (1.0 - lambda) * y;
    let weights_raw: Vec<f64> =
        a.weights.iter().zip(&b.weights).map(|(x, y)| mix(*x, *y).max(1e-9)).collect();
    let wsum: f64 = weights_raw.iter().sum();
    MarSpec {
        weights: weights_raw.into_iter().map(|w| w / wsum).collect(),
        components: a
            .components
            .iter()
            .zip(&b.components)
            .map(|(ca, cb)| crate::generator::MarComponent {
                intercept: mix(ca.intercept, cb.intercept),
                coeffs: ca
                    .coeffs
                    .iter()
                    .zip(&cb.coeffs)
                    .map(|(x, y)| mix(*x, *y))
                    .collect(),
                sigma: mix(ca.sigma.ln(), cb.sigma.ln()).exp(),
            })
            .collect(),
    }
}

/// Gaussian jitter on every parameter; positive quantities move
/// multiplicatively.
fn mutate(mut spec: MarSpec, scale: f64, rng: &mut RngStream) -> MarSpec {
    let normal = Normal::new(0.0, scale).unwrap();
    for w in &mut spec.weights {
        let z: f64 = rng.sample(StandardNormal);
        *w *= (scale * z).exp();
    }
    let wsum: f64 = spec.weights.iter().sum();
    for w in &mut spec.weights {
        *w /= wsum;
    }
    for c in &mut spec.components {
        c.intercept += normal.sample(rng);
        for phi in &mut c.coeffs {
            *phi += normal.sample(rng);
        }
        let z: f64 = rng.sample(StandardNormal);
        c.sigma *= (scale * z).exp();
    }
    spec
}
