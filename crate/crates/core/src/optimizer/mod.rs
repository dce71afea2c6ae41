//! Bounded global optimizers over the reset-probability box `[0, 1]^m`.
//!
//! Both optimizers drive the same [`Objective`] and share the outer-iteration
//! bookkeeping in [`Tracker`]: the evaluation budget is sliced into outer
//! iterations of a fixed number of cost evaluations, the best cost is logged
//! at every boundary, and [`check_stop`] decides whether to continue.

mod anneal;
mod evolution;
mod local;

pub use anneal::{dual_annealing, AnnealSettings};
pub use evolution::{evolutionary_optimize, EvoSettings};
pub use local::{bounded_local_search, LocalSearchSettings};

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::parallel;
use crate::reservoir::NoiseParams;

/// A cost to minimise over `[0, 1]^dimension`.
pub trait Objective: Sync {
    fn dimension(&self) -> usize;

    /// Non-finite values mark failed evaluations.
    fn cost(&self, p: &[f64]) -> f64;
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F> {
    dimension: usize,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(dimension: usize, f: F) -> Self {
        Self { dimension, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn cost(&self, p: &[f64]) -> f64 {
        (self.f)(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    SmallMseChanges,
    StagnationTime,
    MaxIterations,
}

/// Stopping rules shared by both optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StopSettings {
    /// Outer iterations before a hard stop.
    pub max_iterations: usize,
    /// Cost evaluations per outer iteration.
    pub evals_per_iteration: usize,
    /// Consecutive small relative changes that end the run.
    pub small_change_count: usize,
    pub small_change_tolerance: f64,
    /// Wall-clock time without improvement before giving up.
    pub stagnation_secs: Option<f64>,
}

impl Default for StopSettings {
    fn default() -> Self {
        Self {
            max_iterations: 5,
            evals_per_iteration: 200,
            small_change_count: 3,
            small_change_tolerance: 1e-3,
            stagnation_secs: None,
        }
    }
}

impl StopSettings {
    pub fn total_budget(&self) -> usize {
        self.max_iterations * self.evals_per_iteration
    }
}

/// Stop decision from the best-cost history of completed outer iterations.
///
/// `idle` is the wall-clock time since the best cost last improved.
pub fn check_stop(history: &[f64], settings: &StopSettings, idle: Duration) -> Option<StopReason> {
    if history.len() >= settings.max_iterations {
        return Some(StopReason::MaxIterations);
    }
    let k = settings.small_change_count;
    if k > 0 && history.len() > k {
        let tail = &history[history.len() - k - 1..];
        let small = tail.windows(2).all(|w| {
            let scale = w[0].abs().max(f64::MIN_POSITIVE);
            ((w[1] - w[0]) / scale).abs() < settings.small_change_tolerance
        });
        if small {
            return Some(StopReason::SmallMseChanges);
        }
    }
    if let Some(limit) = settings.stagnation_secs {
        if idle.as_secs_f64() > limit {
            return Some(StopReason::StagnationTime);
        }
    }
    None
}

/// `p_i ~ U(0, 1)` i.i.d., reproducible under `seed`.
pub fn random_init(m: usize, seed: u64) -> NoiseParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    NoiseParams::new((0..m).map(|_| rng.random::<f64>()).collect()).expect("uniform draws lie in [0, 1)")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best: NoiseParams,
    pub best_cost: f64,
    /// Entry 0 is the random initialisation, then one entry per outer iteration.
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub stop_reason: StopReason,
}

impl OptimizationResult {
    /// Orders of magnitude gained from the initial cost to the final one.
    pub fn improvement_orders(&self) -> f64 {
        let first = self.history.first().copied().unwrap_or(f64::NAN);
        (first / self.best_cost).log10()
    }

    /// Writes `iteration,best_mse` rows.
    pub fn write_history_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["iteration", "best_mse"])?;
        for (i, c) in self.history.iter().enumerate() {
            w.write_record([i.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluation accounting, best-ever tracking and outer-iteration bookkeeping.
pub struct Tracker<'a> {
    objective: &'a dyn Objective,
    settings: StopSettings,
    evaluations: usize,
    best_x: Vec<f64>,
    best_cost: f64,
    history: Vec<f64>,
    initial_logged: bool,
    last_improvement: Instant,
    stop: Option<StopReason>,
}

impl<'a> Tracker<'a> {
    pub fn new(objective: &'a dyn Objective, settings: StopSettings) -> Self {
        Self {
            objective,
            settings,
            evaluations: 0,
            best_x: Vec::new(),
            best_cost: f64::INFINITY,
            history: Vec::new(),
            initial_logged: false,
            last_improvement: Instant::now(),
            stop: None,
        }
    }

    pub fn dimension(&self) -> usize {
        self.objective.dimension()
    }

    pub fn stopped(&self) -> bool {
        self.stop.is_some()
    }

    pub fn best(&self) -> (&[f64], f64) {
        (&self.best_x, self.best_cost)
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    fn remaining(&self) -> usize {
        if self.stopped() {
            0
        } else {
            self.settings.total_budget().saturating_sub(self.evaluations)
        }
    }

    /// Records the best cost seen so far as the iteration-0 entry.
    pub fn log_initial(&mut self) {
        if !self.initial_logged {
            self.history.push(self.best_cost);
            self.initial_logged = true;
        }
    }

    fn record(&mut self, x: &[f64], cost: f64) {
        self.evaluations += 1;
        if cost < self.best_cost {
            self.best_cost = cost;
            self.best_x = x.to_vec();
            self.last_improvement = Instant::now();
        }
        if self.evaluations % self.settings.evals_per_iteration.max(1) == 0 {
            self.log_initial();
            self.history.push(self.best_cost);
            self.stop = check_stop(&self.history[1..], &self.settings, self.last_improvement.elapsed());
        } else if let Some(limit) = self.settings.stagnation_secs {
            if self.last_improvement.elapsed().as_secs_f64() > limit {
                self.stop = Some(StopReason::StagnationTime);
            }
        }
    }

    fn sanitize(cost: f64) -> f64 {
        if cost.is_finite() {
            cost
        } else {
            log::warn!("non-finite cost rejected");
            f64::INFINITY
        }
    }

    /// Evaluates one point; `None` once the run has stopped.
    pub fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.remaining() == 0 {
            return None;
        }
        let cost = Self::sanitize(self.objective.cost(x));
        self.record(x, cost);
        Some(cost)
    }

    /// Evaluates a batch concurrently, truncated to the remaining budget.
    pub fn eval_batch(&mut self, xs: &[Vec<f64>]) -> Vec<f64> {
        let take = xs.len().min(self.remaining());
        let objective = self.objective;
        let costs = parallel::map(&xs[..take], |x| Self::sanitize(objective.cost(x)));
        for (x, &c) in xs.iter().zip(&costs) {
            if self.stopped() {
                break;
            }
            self.record(x, c);
        }
        costs
    }

    /// Closes the run into a result.
    pub fn finish(mut self) -> Result<OptimizationResult> {
        if !self.best_cost.is_finite() {
            return Err(crate::QnirError::NoFiniteCost);
        }
        self.log_initial();
        let reason = self.stop.unwrap_or(StopReason::MaxIterations);
        let best = NoiseParams::new(self.best_x.iter().map(|v| v.clamp(0.0, 1.0)).collect())?;
        Ok(OptimizationResult {
            best,
            best_cost: self.best_cost,
            history: self.history,
            evaluations: self.evaluations,
            stop_reason: reason,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stop_on_flat_history() {
        let s = StopSettings::default();
        assert_eq!(check_stop(&[1.0, 1.0, 1.0, 1.0], &s, Duration::ZERO), Some(StopReason::SmallMseChanges));
    }

    #[test]
    fn decreasing_history_continues() {
        let s = StopSettings::default();
        assert_eq!(check_stop(&[1.0, 0.5, 0.25, 0.1], &s, Duration::ZERO), None);
    }

    #[test]
    fn max_iterations_reached() {
        let s = StopSettings::default();
        assert_eq!(
            check_stop(&[5.0, 4.0, 3.0, 2.0, 1.0], &s, Duration::ZERO),
            Some(StopReason::MaxIterations)
        );
    }

    #[test]
    fn stagnation_limit() {
        let s = StopSettings {
            stagnation_secs: Some(1.0),
            ..StopSettings::default()
        };
        assert_eq!(check_stop(&[1.0], &s, Duration::from_secs(2)), Some(StopReason::StagnationTime));
        assert_eq!(check_stop(&[1.0], &s, Duration::from_millis(10)), None);
    }

    #[test]
    fn random_init_reproducible_and_uniform() {
        assert_eq!(random_init(42, 7), random_init(42, 7));
        assert_ne!(random_init(42, 7), random_init(42, 8));
        let big = random_init(10_000, 1);
        let mean = big.as_slice().iter().sum::<f64>() / 10_000.0;
        assert!((0.48..=0.52).contains(&mean), "mean {mean}");
    }

    #[test]
    fn tracker_respects_budget() {
        let obj = FnObjective::new(2, |p: &[f64]| p[0] + p[1]);
        let settings = StopSettings {
            max_iterations: 2,
            evals_per_iteration: 3,
            ..StopSettings::default()
        };
        let mut t = Tracker::new(&obj, settings);
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0 / (i + 1) as f64, 0.0]).collect();
        let costs = t.eval_batch(&pts);
        assert_eq!(costs.len(), 6);
        assert_eq!(t.evaluations(), 6);
        assert!(t.eval(&[0.0, 0.0]).is_none());
        let res = t.finish().unwrap();
        assert_eq!(res.history.len(), 3);
        assert_eq!(res.stop_reason, StopReason::MaxIterations);
    }

    #[test]
    fn all_infinite_costs_fail() {
        let obj = FnObjective::new(1, |_: &[f64]| f64::NAN);
        let mut t = Tracker::new(&obj, StopSettings::default());
        t.eval(&[0.5]);
        assert!(matches!(t.finish(), Err(crate::QnirError::NoFiniteCost)));
    }
}
