use serde::{Deserialize, Serialize};

use super::Tracker;

/// Projected quasi-Newton search inside `[0, 1]^m` with forward-difference
/// gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalSearchSettings {
    /// Evaluation cap for a single local search call.
    pub max_evals: usize,
    /// Stored curvature pairs.
    pub memory: usize,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for LocalSearchSettings {
    fn default() -> Self {
        Self {
            max_evals: 400,
            memory: 8,
            fd_step: 1e-7,
        }
    }
}

fn project(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Forward differences; steps flip inward at the upper bound.
fn gradient(tracker: &mut Tracker<'_>, x: &[f64], fx: f64, step: f64) -> Option<Vec<f64>> {
    let mut points = Vec::with_capacity(x.len());
    let mut steps = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let h = step * x[i].abs().max(1.0);
        let h = if x[i] + h > 1.0 { -h } else { h };
        let mut p = x.to_vec();
        p[i] += h;
        points.push(p);
        steps.push(h);
    }
    let costs = tracker.eval_batch(&points);
    if costs.len() < x.len() || costs.iter().any(|c| !c.is_finite()) {
        return None;
    }
    Some(costs.iter().zip(&steps).map(|(c, h)| (c - fx) / h).collect())
}

/// Zeroes gradient components that point out of the box at active bounds.
fn free_gradient(x: &[f64], g: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| {
            if (xi <= 0.0 && gi > 0.0) || (xi >= 1.0 && gi < 0.0) {
                0.0
            } else {
                gi
            }
        })
        .collect()
}

/// L-BFGS two-loop recursion on `g` with stored `(s, y)` pairs.
fn two_loop(g: &[f64], pairs: &[(Vec<f64>, Vec<f64>)]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y) in pairs.iter().rev() {
        let rho = 1.0 / dot(y, s);
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push((rho, a));
    }
    if let Some((s, y)) = pairs.last() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y), (rho, a)) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += si * (a - b);
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Local descent from `start` (with known cost `start_cost`), charging every
/// evaluation to `tracker`. Returns the best point found and its cost.
pub fn bounded_local_search(
    tracker: &mut Tracker<'_>,
    start: &[f64],
    start_cost: f64,
    settings: &LocalSearchSettings,
) -> (Vec<f64>, f64) {
    let dim = start.len();
    let budget_end = tracker.evaluations() + settings.max_evals;
    let mut x = start.to_vec();
    project(&mut x);
    let mut fx = start_cost;
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();

    let Some(mut g) = gradient(tracker, &x, fx, settings.fd_step) else {
        return (x, fx);
    };
    while tracker.evaluations() + dim + 2 <= budget_end && !tracker.stopped() {
        let pg = free_gradient(&x, &g);
        let gmax = pg.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax <= f64::MIN_POSITIVE {
            break;
        }
        let mut d = two_loop(&pg, &pairs);
        if dot(&d, &pg) >= 0.0 {
            d = pg.iter().map(|v| -v).collect();
            pairs.clear();
        }
        // first move: largest coordinate change of 0.1
        let mut alpha = if pairs.is_empty() {
            0.1 / d.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..12 {
            if tracker.evaluations() >= budget_end {
                break;
            }
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            project(&mut trial);
            let step: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let Some(ft) = tracker.eval(&trial) else { break };
            if ft.is_finite() && ft <= fx + 1e-4 * dot(&pg, &step) && ft < fx {
                accepted = Some((trial, ft, step));
                break;
            }
            alpha *= 0.3;
        }
        let Some((trial, ft, step)) = accepted else { break };
        let Some(g_new) = gradient(tracker, &trial, ft, settings.fd_step) else {
            x = trial;
            fx = ft;
            break;
        };
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&step, &y) > 1e-12 * dot(&y, &y).sqrt() * dot(&step, &step).sqrt() {
            pairs.push((step, y));
            if pairs.len() > settings.memory {
                pairs.remove(0);
            }
        }
        x = trial;
        fx = ft;
        g = g_new;
    }
    (x, fx)
}
