//! Linear output layer trained by least squares.

use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{QnirError, Result};
use crate::reservoir::FeatureMatrix;

/// Washout / train / test boundaries on a time axis.
///
/// Steps `0..washout` are discarded, `washout..=train_end` train the readout
/// and `train_end+1..=test_end` are held out for testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub washout: usize,
    pub train_end: usize,
    pub test_end: usize,
}

impl SplitSpec {
    pub fn new(washout: usize, train_end: usize, test_end: usize) -> Result<Self> {
        let s = Self {
            washout,
            train_end,
            test_end,
        };
        if washout > train_end || train_end >= test_end {
            return Err(QnirError::InvalidConfig(format!("unordered split {s:?}")));
        }
        Ok(s)
    }

    pub fn train(&self) -> RangeInclusive<usize> {
        self.washout..=self.train_end
    }

    pub fn test(&self) -> RangeInclusive<usize> {
        self.train_end + 1..=self.test_end
    }

    pub fn check_length(&self, len: usize) -> Result<()> {
        if self.test_end >= len {
            return Err(QnirError::InvalidConfig(format!(
                "split ends at step {} but the sequence has {len} steps",
                self.test_end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReadoutConfig {
    /// Append a bias row of ones to the design matrix.
    pub intercept: bool,
    /// Tikhonov weight; `0` is plain minimum-norm least squares.
    pub ridge: f64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            intercept: true,
            ridge: 0.0,
        }
    }
}

/// Trained weights `W_opt`; the last weight is the bias when `intercept` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub weights: Vec<f64>,
    pub intercept: bool,
    pub train_mse: f64,
}

/// Design matrix with one row per signal (plus bias) and one column per time
/// step in `range`.
pub fn design_matrix(
    features: &FeatureMatrix,
    range: RangeInclusive<usize>,
    intercept: bool,
) -> Result<DMatrix<f64>> {
    if range.is_empty() || *range.end() >= features.len() {
        return Err(QnirError::InvalidConfig(format!(
            "time range {range:?} outside a feature matrix of {} steps",
            features.len()
        )));
    }
    let rows = features.rows() + usize::from(intercept);
    let start = *range.start();
    let cols = range.end() - start + 1;
    Ok(DMatrix::from_fn(rows, cols, |r, c| {
        if r < features.rows() {
            features.value(r, start + c)
        } else {
            1.0
        }
    }))
}

/// Least-squares fit of `y ≈ Wᵀ X` for `X` of shape `features × samples`.
///
/// Solved through the SVD of `Xᵀ`, giving the minimum-norm solution when the
/// signals are collinear. A positive `ridge` shrinks each singular direction
/// by `σ / (σ² + λ)`.
pub fn fit(x: &DMatrix<f64>, y: &[f64], ridge: f64, intercept: bool) -> Result<ReadoutModel> {
    if x.ncols() == 0 || x.nrows() == 0 {
        return Err(QnirError::InvalidConfig("empty training range".into()));
    }
    if y.len() != x.ncols() {
        return Err(QnirError::LengthMismatch {
            expected: x.ncols(),
            actual: y.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(QnirError::InvalidConfig("non-finite training data".into()));
    }
    if ridge < 0.0 || !ridge.is_finite() {
        return Err(QnirError::InvalidConfig(format!("invalid ridge weight {ridge}")));
    }

    let a = x.transpose();
    let target = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors");
    let v_t = svd.v_t.as_ref().expect("right singular vectors");
    let sigma_max = svd.singular_values.max();
    let cutoff = f64::EPSILON * a.nrows().max(a.ncols()) as f64 * sigma_max;

    let mut w = DVector::zeros(a.ncols());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff {
            continue;
        }
        let gain = if ridge > 0.0 { s / (s * s + ridge) } else { 1.0 / s };
        let coeff = u.column(i).dot(&target) * gain;
        w += v_t.row(i).transpose() * coeff;
    }

    let residual = &a * &w - &target;
    let train_mse = residual.norm_squared() / y.len() as f64;
    Ok(ReadoutModel {
        weights: w.iter().cloned().collect(),
        intercept,
        train_mse,
    })
}

impl ReadoutModel {
    /// `ŷ = W_optᵀ X`.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.nrows() != self.weights.len() {
            return Err(QnirError::LengthMismatch {
                expected: self.weights.len(),
                actual: x.nrows(),
            });
        }
        let w = DVector::from_column_slice(&self.weights);
        Ok((x.transpose() * w).iter().cloned().collect())
    }

    pub fn bias(&self) -> Option<f64> {
        self.intercept.then(|| *self.weights.last().expect("non-empty weights"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bias_only_recovers_constant() {
        let x = DMatrix::from_element(1, 10, 1.0);
        let m = fit(&x, &[0.37; 10], 0.0, true).unwrap();
        assert!((m.weights[0] - 0.37).abs() < 1e-14);
        assert!(m.train_mse < 1e-28);
    }

    #[test]
    fn exact_linear_combination() {
        let x = DMatrix::from_fn(3, 20, |r, c| ((r + 1) as f64 * 0.3 * c as f64).sin());
        let y: Vec<f64> = (0..20)
            .map(|c| 0.5 * x[(0, c)] - 1.25 * x[(1, c)] + 2.0 * x[(2, c)])
            .collect();
        let m = fit(&x, &y, 0.0, false).unwrap();
        let pred = m.predict(&x).unwrap();
        let resid: f64 = pred.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum();
        assert!(resid.sqrt() < 1e-10);
        assert!((m.weights[1] + 1.25).abs() < 1e-10);
    }

    #[test]
    fn rank_deficient_gives_minimum_norm() {
        // two identical rows: min-norm splits the weight evenly
        let x = DMatrix::from_fn(2, 8, |_, c| c as f64);
        let y: Vec<f64> = (0..8).map(|c| 2.0 * c as f64).collect();
        let m = fit(&x, &y, 0.0, false).unwrap();
        assert!((m.weights[0] - 1.0).abs() < 1e-10);
        assert!((m.weights[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_features_predict_bias() {
        let fm = FeatureMatrix::new(2, 30, vec![0.0; 60], 0).unwrap();
        let x = design_matrix(&fm, 0..=29, true).unwrap();
        let y: Vec<f64> = (0..30).map(|t| 0.1 + 0.001 * t as f64).collect();
        let m = fit(&x, &y, 0.0, true).unwrap();
        let pred = m.predict(&x).unwrap();
        let bias = m.bias().unwrap();
        assert!(pred.iter().all(|v| (v - bias).abs() < 1e-14));
    }

    #[test]
    fn errors() {
        let x = DMatrix::from_element(2, 5, 1.0);
        assert!(fit(&x, &[1.0; 4], 0.0, false).is_err());
        assert!(fit(&DMatrix::zeros(2, 0), &[], 0.0, false).is_err());
        let m = fit(&x, &[1.0; 5], 0.0, false).unwrap();
        assert!(m.predict(&DMatrix::from_element(3, 5, 1.0)).is_err());
        let fm = FeatureMatrix::new(1, 5, vec![0.0; 5], 0).unwrap();
        assert!(design_matrix(&fm, 2..=5, true).is_err());
    }

    #[test]
    fn split_ranges() {
        let s = SplitSpec::new(20, 80, 100).unwrap();
        assert_eq!(s.train().count(), 61);
        assert_eq!(s.test().count(), 20);
        assert!(s.check_length(100).is_err());
        assert!(s.check_length(101).is_ok());
        assert!(SplitSpec::new(30, 20, 40).is_err());
        assert!(SplitSpec::new(0, 20, 20).is_err());
    }

    #[test]
    fn ridge_shrinks_weights() {
        let x = DMatrix::from_fn(2, 30, |r, c| ((r + 2) as f64 * 0.1 * c as f64).cos());
        let y: Vec<f64> = (0..30).map(|c| x[(0, c)] + x[(1, c)]).collect();
        let plain = fit(&x, &y, 0.0, false).unwrap();
        let shrunk = fit(&x, &y, 10.0, false).unwrap();
        let norm = |w: &[f64]| w.iter().map(|v| v * v).sum::<f64>();
        assert!(norm(&shrunk.weights) < norm(&plain.weights));
    }
}
