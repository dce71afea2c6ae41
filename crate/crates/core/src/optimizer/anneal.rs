//! Dual annealing: generalized simulated annealing (Tsallis visiting and
//! acceptance distributions) with periodic bounded local search.
//!
//! The chain mirrors the classic generalized-annealing strategy: each
//! temperature step first perturbs all coordinates at once `dim` times, then
//! one coordinate at a time `dim` times. Local search starts from the best
//! point whenever the chain improved it, and from the chain's reference
//! point when the chain has been stuck for too long.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::local::{bounded_local_search, LocalSearchSettings};
use super::{Objective, OptimizationResult, StopSettings, Tracker};
use crate::error::Result;

const TAIL_LIMIT: f64 = 1e8;
const MIN_VISIT_BOUND: f64 = 1e-10;
const NOT_IMPROVED_MAX: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealSettings {
    /// Visiting distribution parameter `q_v` in `(1, 3)`.
    pub visit: f64,
    /// Acceptance parameter `q_a` (< 0 makes uphill moves rarer).
    pub accept: f64,
    pub initial_temp: f64,
    /// Restart when the temperature falls below `initial_temp · ratio`.
    pub restart_temp_ratio: f64,
    pub local_search: bool,
    pub local: LocalSearchSettings,
    pub stop: StopSettings,
    pub seed: u64,
}

impl Default for AnnealSettings {
    fn default() -> Self {
        Self {
            visit: 2.62,
            accept: -5.0,
            initial_temp: 5230.0,
            restart_temp_ratio: 2e-5,
            local_search: true,
            local: LocalSearchSettings::default(),
            stop: StopSettings::default(),
            seed: 0,
        }
    }
}

/// Heavy-tailed visiting distribution parameterised by `q_v`.
struct Visiting {
    qv: f64,
    factor4_p: f64,
    factor6: f64,
}

impl Visiting {
    fn new(qv: f64) -> Self {
        let factor2 = ((4.0 - qv) * (qv - 1.0).ln()).exp();
        let factor3 = ((2.0 - qv) * 2f64.ln() / (qv - 1.0)).exp();
        let factor4_p = std::f64::consts::PI.sqrt() * factor2 / (factor3 * (3.0 - qv));
        let factor5 = 1.0 / (qv - 1.0) - 0.5;
        let d1 = 2.0 - factor5;
        let pf = std::f64::consts::PI * (1.0 - factor5);
        let factor6 = pf / pf.sin() / libm::lgamma(d1).exp();
        Self {
            qv,
            factor4_p,
            factor6,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng, temperature: f64) -> f64 {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let qv = self.qv;
        let factor1 = (temperature.ln() / (qv - 1.0)).exp();
        let factor4 = self.factor4_p * factor1;
        let x = x * (-(qv - 1.0) * (self.factor6 / factor4).ln() / (3.0 - qv)).exp();
        let den = ((qv - 1.0) * y.abs().ln() / (3.0 - qv)).exp();
        let v = x / den;
        if v > TAIL_LIMIT {
            TAIL_LIMIT * rng.random::<f64>()
        } else if v < -TAIL_LIMIT {
            -TAIL_LIMIT * rng.random::<f64>()
        } else {
            v
        }
    }
}

/// Folds a coordinate back into `[0, 1)` periodically.
fn wrap_unit(v: f64) -> f64 {
    let b = v % 1.0 + 1.0;
    let w = b % 1.0;
    if w.abs() < MIN_VISIT_BOUND {
        w + MIN_VISIT_BOUND
    } else {
        w
    }
}

struct Chain<'t, 'o> {
    tracker: &'t mut Tracker<'o>,
    rng: ChaCha8Rng,
    visiting: Visiting,
    settings: AnnealSettings,
    current: (Vec<f64>, f64),
    best: (Vec<f64>, f64),
    xmin: (Vec<f64>, f64),
    not_improved: usize,
    not_improved_max: usize,
    temperature_step: f64,
    improved: bool,
}

impl Chain<'_, '_> {
    fn dim(&self) -> usize {
        self.current.0.len()
    }

    fn random_point(&mut self) -> Vec<f64> {
        (0..self.dim()).map(|_| self.rng.random::<f64>()).collect()
    }

    fn visit(&mut self, j: usize, temperature: f64) -> Vec<f64> {
        let dim = self.dim();
        let mut x = self.current.0.clone();
        if j < dim {
            for xi in x.iter_mut() {
                let step = self.visiting.sample(&mut self.rng, temperature);
                *xi = wrap_unit(*xi + step);
            }
        } else {
            let i = j - dim;
            let step = self.visiting.sample(&mut self.rng, temperature);
            x[i] = wrap_unit(x[i] + step);
        }
        x
    }

    fn accept_reject(&mut self, j: usize, energy: f64, x: Vec<f64>) {
        let r: f64 = self.rng.random();
        let qa = self.settings.accept;
        let pqv_temp = 1.0 - (1.0 - qa) * (energy - self.current.1) / self.temperature_step;
        let pqv = if pqv_temp <= 0.0 {
            0.0
        } else {
            (pqv_temp.ln() / (1.0 - qa)).exp()
        };
        if r <= pqv {
            self.current = (x, energy);
            self.xmin = self.current.clone();
        }
        if self.not_improved >= self.not_improved_max && (j == 0 || self.current.1 < self.xmin.1) {
            self.xmin = self.current.clone();
        }
    }

    fn update_best(&mut self, x: &[f64], e: f64) {
        if e < self.best.1 {
            self.best = (x.to_vec(), e);
        }
    }

    /// One temperature step; returns false once the budget is exhausted.
    fn run(&mut self, step: usize, temperature: f64) -> bool {
        self.temperature_step = temperature / (step as f64 + 1.0);
        self.not_improved += 1;
        for j in 0..2 * self.dim() {
            if j == 0 {
                self.improved = step == 0;
            }
            let x = self.visit(j, temperature);
            let Some(e) = self.tracker.eval(&x) else {
                return false;
            };
            if e < self.current.1 {
                self.current = (x.clone(), e);
                if e < self.best.1 {
                    self.update_best(&x, e);
                    self.improved = true;
                    self.not_improved = 0;
                }
            } else {
                self.accept_reject(j, e, x);
            }
        }
        true
    }

    fn minimize(&mut self, from: (Vec<f64>, f64)) -> (Vec<f64>, f64) {
        bounded_local_search(self.tracker, &from.0, from.1, &self.settings.local)
    }

    fn local_search(&mut self) -> bool {
        if self.improved {
            let (x, e) = self.minimize(self.best.clone());
            if e < self.best.1 {
                self.not_improved = 0;
                self.update_best(&x, e);
                self.current = (x, e);
            }
            if self.tracker.stopped() {
                return false;
            }
        }
        if self.not_improved >= self.not_improved_max {
            let (x, e) = self.minimize(self.xmin.clone());
            self.xmin = (x.clone(), e);
            self.not_improved = 0;
            self.not_improved_max = self.dim();
            if e < self.best.1 {
                self.update_best(&x, e);
                self.current = (x, e);
            }
        }
        !self.tracker.stopped()
    }
}

/// Minimises `objective` over `[0, 1]^m` by dual annealing.
pub fn dual_annealing(objective: &dyn Objective, settings: &AnnealSettings) -> Result<OptimizationResult> {
    let mut tracker = Tracker::new(objective, settings.stop);
    let dim = objective.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let x0: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let Some(e0) = tracker.eval(&x0) else {
        return tracker.finish();
    };
    tracker.log_initial();

    let mut chain = Chain {
        tracker: &mut tracker,
        rng,
        visiting: Visiting::new(settings.visit),
        settings: *settings,
        current: (x0.clone(), e0),
        best: (x0.clone(), e0),
        xmin: (x0, e0),
        not_improved: 0,
        not_improved_max: NOT_IMPROVED_MAX,
        temperature_step: settings.initial_temp,
        improved: false,
    };

    let t1 = ((settings.visit - 1.0) * 2f64.ln()).exp() - 1.0;
    let restart_temp = settings.initial_temp * settings.restart_temp_ratio;
    'outer: loop {
        for i in 0.. {
            let s = i as f64 + 2.0;
            let t2 = ((settings.visit - 1.0) * s.ln()).exp() - 1.0;
            let temperature = settings.initial_temp * t1 / t2;
            if temperature < restart_temp {
                // restart from a fresh random point
                let x = chain.random_point();
                let Some(e) = chain.tracker.eval(&x) else { break 'outer };
                chain.current = (x, e);
                break;
            }
            if !chain.run(i, temperature) {
                break 'outer;
            }
            if settings.local_search && !chain.local_search() {
                break 'outer;
            }
            if chain.tracker.stopped() {
                break 'outer;
            }
        }
    }
    tracker.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::FnObjective;

    #[test]
    fn wrap_stays_in_box() {
        for v in [-3.7, -0.2, 0.0, 0.5, 1.0, 2.25, 1e7 + 0.3] {
            let w = wrap_unit(v);
            assert!((0.0..1.0).contains(&w), "{v} -> {w}");
        }
    }

    #[test]
    fn visiting_is_heavy_tailed_and_finite() {
        let vis = Visiting::new(2.62);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws: Vec<f64> = (0..5000).map(|_| vis.sample(&mut rng, 100.0)).collect();
        assert!(draws.iter().all(|d| d.is_finite() && d.abs() <= TAIL_LIMIT));
        let big = draws.iter().filter(|d| d.abs() > 10.0).count();
        assert!(big > 0);
    }

    #[test]
    fn convex_bowl_converges() {
        let obj = FnObjective::new(4, |p: &[f64]| p.iter().map(|v| (v - 0.5).powi(2)).sum());
        let res = dual_annealing(&obj, &AnnealSettings { seed: 11, ..Default::default() }).unwrap();
        assert!(res.best.as_slice().iter().all(|v| (v - 0.5).abs() < 1e-3), "{:?}", res.best);
        assert!(res.evaluations <= 1000);
    }

    #[test]
    fn history_running_minimum_monotone() {
        let obj = FnObjective::new(6, |p: &[f64]| p.iter().map(|v| (v * 7.0).sin() + v).sum());
        let res = dual_annealing(&obj, &AnnealSettings { seed: 5, ..Default::default() }).unwrap();
        assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(res.best_cost, *res.history.last().unwrap());
    }
}
