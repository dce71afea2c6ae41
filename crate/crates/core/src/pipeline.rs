//! Reservoir, readout and metrics wired together for one task.

use serde::{Deserialize, Serialize};

use crate::benchmarks::TaskBundle;
use crate::error::{QnirError, Result};
use crate::metrics::{mse, MetricReport};
use crate::optimizer::Objective;
use crate::readout::{design_matrix, fit, ReadoutConfig, ReadoutModel, SplitSpec};
use crate::reservoir::{simulate, FeatureMatrix, NoiseParams, ReservoirConfig};

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub features: FeatureMatrix,
    pub model: ReadoutModel,
    /// Test-split predictions.
    pub predictions: Vec<f64>,
    pub metrics: MetricReport,
    /// All features vanished (e.g. zero noise); predictions are the bias only.
    pub degenerate: bool,
}

fn check_task(task: &TaskBundle, cfg: &ReservoirConfig) -> Result<()> {
    if task.input.len() != task.target.len() {
        return Err(QnirError::LengthMismatch {
            expected: task.input.len(),
            actual: task.target.len(),
        });
    }
    task.split.check_length(task.len())?;
    if task.split.washout < cfg.washout {
        return Err(QnirError::InvalidConfig(format!(
            "split washout {} is shorter than the reservoir washout {}",
            task.split.washout, cfg.washout
        )));
    }
    Ok(())
}

fn train_and_predict(
    features: &FeatureMatrix,
    target: &[f64],
    train: SplitSpec,
    readout: &ReadoutConfig,
) -> Result<(ReadoutModel, Vec<f64>)> {
    let x_train = design_matrix(features, train.train(), readout.intercept)?;
    let y_train = &target[train.train()];
    let model = fit(&x_train, y_train, readout.ridge, readout.intercept)?;
    let x_test = design_matrix(features, train.test(), readout.intercept)?;
    let predictions = model.predict(&x_test)?;
    Ok((model, predictions))
}

/// Runs the reservoir on `task`, fits the readout on the training split and
/// scores the test split.
pub fn evaluate(
    task: &TaskBundle,
    cfg: &ReservoirConfig,
    p: &NoiseParams,
    readout: &ReadoutConfig,
) -> Result<Evaluation> {
    check_task(task, cfg)?;
    let features = simulate(&task.input, cfg, p)?;
    let degenerate = features.is_degenerate();
    if degenerate {
        log::warn!("reservoir features are all zero; readout reduces to a constant");
    }
    let (model, predictions) = train_and_predict(&features, &task.target, task.split, readout)?;
    let y_test = &task.target[task.split.test()];
    let prev = task.target[task.split.train_end];
    let metrics = MetricReport::compute(prev, y_test, &predictions)?;
    Ok(Evaluation {
        features,
        model,
        predictions,
        metrics,
        degenerate,
    })
}

/// Which split the optimizer scores.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostSplit {
    /// MSE on the test split.
    #[default]
    Test,
    /// Hold out the last `fraction` of the training window and score that,
    /// leaving the test split untouched.
    Validation { fraction: f64 },
}

/// Noise probabilities → MSE of the trained readout.
pub struct ReservoirObjective<'a> {
    task: &'a TaskBundle,
    cfg: ReservoirConfig,
    readout: ReadoutConfig,
    split: SplitSpec,
}

impl<'a> ReservoirObjective<'a> {
    pub fn new(task: &'a TaskBundle, cfg: ReservoirConfig, readout: ReadoutConfig, cost: CostSplit) -> Result<Self> {
        cfg.validate()?;
        check_task(task, &cfg)?;
        let split = match cost {
            CostSplit::Test => task.split,
            CostSplit::Validation { fraction } => {
                if !(fraction > 0.0 && fraction < 1.0) {
                    return Err(QnirError::InvalidConfig(format!(
                        "validation fraction {fraction} outside (0, 1)"
                    )));
                }
                let s = task.split;
                let span = s.train_end - s.washout + 1;
                let held = ((span as f64 * fraction).round() as usize).clamp(1, span - 1);
                SplitSpec::new(s.washout, s.train_end - held, s.train_end)?
            }
        };
        Ok(Self {
            task,
            cfg,
            readout,
            split,
        })
    }

    /// Features run only up to the scored window.
    pub fn try_cost(&self, p: &[f64]) -> Result<f64> {
        let p = NoiseParams::new(p.to_vec())?;
        let end = self.split.test_end + 1;
        let features = simulate(&self.task.input[..end], &self.cfg, &p)?;
        let (_, predictions) = train_and_predict(&features, &self.task.target, self.split, &self.readout)?;
        mse(&self.task.target[self.split.test()], &predictions)
    }
}

impl Objective for ReservoirObjective<'_> {
    fn dimension(&self) -> usize {
        self.cfg.parameter_count()
    }

    fn cost(&self, p: &[f64]) -> f64 {
        self.try_cost(p).unwrap_or_else(|e| {
            log::warn!("cost evaluation failed: {e}");
            f64::INFINITY
        })
    }
}
