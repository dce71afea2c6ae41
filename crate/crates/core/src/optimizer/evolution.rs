use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Objective, OptimizationResult, StopSettings, Tracker};
use crate::error::{QnirError, Result};

/// (μ+λ) evolution strategy settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvoSettings {
    /// Offspring per generation (λ); also the initial population size.
    pub population: usize,
    /// Fraction of the population kept as parents (μ = fraction · λ).
    pub elite_fraction: f64,
    /// Standard deviation of the Gaussian mutation.
    pub sigma: f64,
    pub stop: StopSettings,
    pub seed: u64,
}

impl Default for EvoSettings {
    fn default() -> Self {
        Self {
            population: 20,
            elite_fraction: 0.25,
            sigma: 0.1,
            stop: StopSettings::default(),
            seed: 0,
        }
    }
}

impl EvoSettings {
    pub fn parents(&self) -> usize {
        ((self.population as f64 * self.elite_fraction).round() as usize).clamp(1, self.population)
    }
}

/// Keeps the `mu` lowest-cost members; ties keep insertion order.
fn select(mut members: Vec<(Vec<f64>, f64)>, mu: usize) -> Vec<(Vec<f64>, f64)> {
    members.sort_by(|a, b| a.1.total_cmp(&b.1));
    members.truncate(mu);
    members
}

/// Minimises `objective` over `[0, 1]^m` with a (μ+λ) evolution strategy.
pub fn evolutionary_optimize(objective: &dyn Objective, settings: &EvoSettings) -> Result<OptimizationResult> {
    if settings.population < 4 {
        return Err(QnirError::InvalidConfig(format!(
            "population must be at least 4, got {}",
            settings.population
        )));
    }
    if !(settings.sigma > 0.0) {
        return Err(QnirError::InvalidConfig("mutation sigma must be positive".into()));
    }
    let dim = objective.dimension();
    let mu = settings.parents();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mutation = Normal::new(0.0, settings.sigma).expect("positive sigma");
    let mut tracker = Tracker::new(objective, settings.stop);

    let initial: Vec<Vec<f64>> = (0..settings.population)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    let costs = tracker.eval_batch(&initial);
    tracker.log_initial();
    let mut parents = select(initial.into_iter().zip(costs).collect(), mu);

    while !tracker.stopped() {
        let offspring: Vec<Vec<f64>> = (0..settings.population)
            .map(|_| {
                let parent = &parents[rng.random_range(0..parents.len())].0;
                parent
                    .iter()
                    .map(|v| (v + mutation.sample(&mut rng)).clamp(0.0, 1.0))
                    .collect()
            })
            .collect();
        let costs = tracker.eval_batch(&offspring);
        if costs.is_empty() {
            break;
        }
        let mut pool = parents;
        pool.extend(offspring.into_iter().zip(costs));
        parents = select(pool, mu);
    }
    tracker.finish()
}
