//! Forecast error metrics and the memory-function analysis.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::benchmarks::mc_probe_with;
use crate::error::{QnirError, Result};
use crate::parallel;
use crate::readout::{design_matrix, fit, ReadoutConfig};
use crate::reservoir::{simulate, NoiseParams, ReservoirConfig};

fn check_pair(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(QnirError::LengthMismatch {
            expected: y.len(),
            actual: yhat.len(),
        });
    }
    if y.len() < 2 {
        return Err(QnirError::DegenerateMetric("fewer than two samples"));
    }
    Ok(())
}

fn sse(y: &[f64], yhat: &[f64]) -> f64 {
    y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum()
}

pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    Ok(sse(y, yhat) / y.len() as f64)
}

/// `Σ(y − ŷ)² / Σ y²`.
pub fn nmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let energy: f64 = y.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Err(QnirError::DegenerateMetric("zero target energy"));
    }
    Ok(sse(y, yhat) / energy)
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_std(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// `sqrt(MSE) / σ(y)` with the sample standard deviation of the target.
pub fn nrmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    let sd = sample_std(y);
    if !(sd > 0.0) {
        return Err(QnirError::DegenerateMetric("constant target"));
    }
    Ok((sse(y, yhat) / y.len() as f64).sqrt() / sd)
}

/// Mean absolute error of `ŷ`, scaled by the one-step Naive MAE of `reference`.
///
/// The caller picks the reference; [`MetricReport::compute`] uses the last
/// training target followed by the test targets.
pub fn mase(y: &[f64], yhat: &[f64], reference: &[f64]) -> Result<f64> {
    check_pair(y, yhat)?;
    if reference.len() < 2 {
        return Err(QnirError::DegenerateMetric("MASE reference shorter than two samples"));
    }
    let scale =
        reference.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (reference.len() - 1) as f64;
    if scale == 0.0 {
        return Err(QnirError::DegenerateMetric("constant MASE reference"));
    }
    let mae = y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64;
    Ok(mae / scale)
}

/// `ŷ_t = y_{t−1}`; the first entry repeats `y_0`.
pub fn naive_forecast(y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    if let Some(&first) = y.first() {
        out.push(first);
        out.extend_from_slice(&y[..y.len() - 1]);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub mse: f64,
    pub nmse: f64,
    pub nrmse: f64,
    pub mase: f64,
}

impl Scores {
    fn compute(y: &[f64], yhat: &[f64], reference: &[f64]) -> Result<Self> {
        Ok(Self {
            mse: mse(y, yhat)?,
            nmse: nmse(y, yhat)?,
            nrmse: nrmse(y, yhat)?,
            mase: mase(y, yhat, reference)?,
        })
    }
}

/// Test-split scores of a model next to the Naive baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(flatten)]
    pub model: Scores,
    pub naive: Scores,
}

impl MetricReport {
    /// `prev` is the target just before the test window; the Naive forecast
    /// of the first test point uses it.
    pub fn compute(prev: f64, y: &[f64], yhat: &[f64]) -> Result<Self> {
        let mut reference = Vec::with_capacity(y.len() + 1);
        reference.push(prev);
        reference.extend_from_slice(y);
        let naive = &reference[..y.len()];
        Ok(Self {
            model: Scores::compute(y, yhat, &reference)?,
            naive: Scores::compute(y, naive, &reference)?,
        })
    }
}

/// Squared Pearson correlation (population moments); 0 when either side is
/// constant.
pub fn memory_function(y: &[f64], yhat: &[f64]) -> f64 {
    let n = y.len().min(yhat.len());
    if n < 2 {
        return 0.0;
    }
    let (y, yhat) = (&y[..n], &yhat[..n]);
    let my = y.iter().sum::<f64>() / n as f64;
    let mh = yhat.iter().sum::<f64>() / n as f64;
    let (mut cov, mut vy, mut vh) = (0.0, 0.0, 0.0);
    for (a, b) in y.iter().zip(yhat) {
        cov += (a - my) * (b - mh);
        vy += (a - my).powi(2);
        vh += (b - mh).powi(2);
    }
    let denom = vy * vh;
    if !(denom > f64::MIN_POSITIVE) {
        log::warn!("degenerate variance in memory function");
        return 0.0;
    }
    (cov * cov / denom).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MemorySettings {
    pub max_delay: usize,
    pub trials: usize,
    pub probe_len: usize,
    /// Probe values are drawn uniformly from this range.
    pub range: (f64, f64),
    pub washout: usize,
    /// Fraction of post-washout steps used for training; the rest score MF.
    pub train_fraction: f64,
    pub readout: ReadoutConfig,
    pub seed: u64,
}

impl Default for MemorySettings {
    fn default() -> Self {
        Self {
            max_delay: 20,
            trials: 30,
            probe_len: 1000,
            range: (0.0, 0.2),
            washout: 20,
            train_fraction: 0.8,
            readout: ReadoutConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryProfile {
    /// `mean[d − 1]` is the trial mean of MF at delay `d`.
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub capacity: f64,
    pub trials: usize,
}

impl MemoryProfile {
    /// Builds the profile from per-trial MF curves.
    pub fn from_trials(curves: &[Vec<f64>]) -> Result<Self> {
        let trials = curves.len();
        let Some(d_max) = curves.first().map(Vec::len) else {
            return Err(QnirError::InvalidConfig("no memory trials".into()));
        };
        let mut mean = vec![0.0; d_max];
        let mut std = vec![0.0; d_max];
        for d in 0..d_max {
            let col: Vec<f64> = curves.iter().map(|c| c[d]).collect();
            let m = col.iter().sum::<f64>() / trials as f64;
            mean[d] = m;
            if trials > 1 {
                std[d] = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt();
            }
        }
        Ok(Self {
            capacity: mean.iter().sum(),
            mean,
            std,
            trials,
        })
    }

    /// MC truncated at `d` delays.
    pub fn capacity_up_to(&self, d: usize) -> f64 {
        self.mean.iter().take(d).sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["delay", "mean", "std"])?;
        for (i, (m, s)) in self.mean.iter().zip(&self.std).enumerate() {
            w.write_record([(i + 1).to_string(), m.to_string(), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// MF curve for delays `1..=max_delay` on one probe sequence.
pub fn memory_curve(
    cfg: &ReservoirConfig,
    p: &NoiseParams,
    probe: &[f64],
    settings: &MemorySettings,
) -> Result<Vec<f64>> {
    let start = settings.washout.max(settings.max_delay);
    if probe.len() < start + 4 {
        return Err(QnirError::InvalidConfig(format!(
            "probe of {} steps is too short for washout/delay {start}",
            probe.len()
        )));
    }
    let usable = probe.len() - start;
    let train = ((usable as f64 * settings.train_fraction).round() as usize).clamp(2, usable - 2);
    let train_range = start..=start + train - 1;
    let test_range = start + train..=probe.len() - 1;

    let features = simulate(probe, cfg, p)?;
    let x_train = design_matrix(&features, train_range.clone(), settings.readout.intercept)?;
    let x_test = design_matrix(&features, test_range.clone(), settings.readout.intercept)?;

    (1..=settings.max_delay)
        .map(|d| {
            let y_train: Vec<f64> = train_range.clone().map(|t| probe[t - d]).collect();
            let y_test: Vec<f64> = test_range.clone().map(|t| probe[t - d]).collect();
            let model = fit(&x_train, &y_train, settings.readout.ridge, settings.readout.intercept)?;
            Ok(memory_function(&y_test, &model.predict(&x_test)?))
        })
        .collect()
}

/// Memory profile over independent probe trials; trial `k` draws from its
/// own RNG stream.
pub fn memory_profile(cfg: &ReservoirConfig, p: &NoiseParams, settings: &MemorySettings) -> Result<MemoryProfile> {
    if settings.trials == 0 {
        return Err(QnirError::InvalidConfig("trials must be at least 1".into()));
    }
    if settings.max_delay == 0 {
        return Err(QnirError::InvalidConfig("max delay must be at least 1".into()));
    }
    let curves = parallel::map_indexed(settings.trials, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        rng.set_stream(k as u64);
        let probe = mc_probe_with(&mut rng, settings.probe_len, settings.range);
        memory_curve(cfg, p, &probe, settings)
    });
    let curves: Vec<Vec<f64>> = curves.into_iter().collect::<Result<_>>()?;
    MemoryProfile::from_trials(&curves)
}
