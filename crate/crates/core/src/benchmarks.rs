//! Benchmark data: NARMA tasks, Mackey-Glass series and memory probes.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QnirError, Result};
use crate::readout::SplitSpec;

/// Samples in a NARMA task: time steps `0..=100`.
pub const NARMA_LENGTH: usize = 101;

/// `u_t = 0.1·sin(2πat/T)·sin(2πbt/T)·sin(2πct/T) + 0.1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputSignal {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub period: f64,
}

impl Default for InputSignal {
    fn default() -> Self {
        Self {
            a: 2.11,
            b: 3.73,
            c: 4.11,
            period: 100.0,
        }
    }
}

pub fn narma_input(len: usize, signal: &InputSignal) -> Vec<f64> {
    (0..len)
        .map(|t| {
            let w = 2.0 * PI * t as f64 / signal.period;
            0.1 * (w * signal.a).sin() * (w * signal.b).sin() * (w * signal.c).sin() + 0.1
        })
        .collect()
}

/// `y_{t+1} = 0.4 y_t + 0.4 y_t y_{t−1} + 0.6 u_t³ + 0.1` from `y_0 = 0.196`,
/// `y_1 = 0.19468`, aligned index-for-index with `u`.
pub fn narma2(u: &[f64]) -> Result<Vec<f64>> {
    if u.len() < 3 {
        return Err(QnirError::LengthMismatch {
            expected: 3,
            actual: u.len(),
        });
    }
    let mut y = vec![0.0; u.len()];
    y[0] = 0.196;
    y[1] = 0.19468;
    for t in 1..u.len() - 1 {
        y[t + 1] = 0.4 * y[t] + 0.4 * y[t] * y[t - 1] + 0.6 * u[t].powi(3) + 0.1;
    }
    Ok(y)
}

/// Coefficients of the order-n recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NarmaCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Default for NarmaCoefficients {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            beta: 0.05,
            gamma: 1.5,
            delta: 0.1,
        }
    }
}

/// `y_{t+1} = α y_t + β y_t Σ_{i<n} y_{t−i} + γ u_{t−(n−1)} u_t + δ`.
///
/// The initial sequence `y_0 … y_{n−1}` is `n−1` zeros then `0.196`; the
/// output stays aligned with `u`, so the zeros sit inside the washout and
/// never reach a training target.
pub fn narma_general(u: &[f64], order: usize, coeffs: &NarmaCoefficients) -> Result<Vec<f64>> {
    if order == 0 || u.len() <= order {
        return Err(QnirError::InvalidConfig(format!(
            "NARMA{order} needs more than {order} inputs, got {}",
            u.len()
        )));
    }
    let n = order;
    let mut y = vec![0.0; u.len()];
    y[n - 1] = 0.196;
    for t in n - 1..u.len() - 1 {
        let window: f64 = y[t + 1 - n..=t].iter().sum();
        y[t + 1] = coeffs.alpha * y[t]
            + coeffs.beta * y[t] * window
            + coeffs.gamma * u[t + 1 - n] * u[t]
            + coeffs.delta;
    }
    Ok(y)
}

/// Mackey-Glass delay equation `dx/dt = a·x(t−τ) / (1 + x(t−τ)^n) − b·x(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MackeyGlassSpec {
    pub tau: f64,
    pub x0: f64,
    pub a: f64,
    pub b: f64,
    pub n: f64,
    /// Unit-time samples before downsampling.
    pub raw_len: usize,
    pub downsample: usize,
    /// Integration step; `tau / step` must be an integer.
    pub step: f64,
}

impl MackeyGlassSpec {
    pub fn new(tau: f64) -> Self {
        Self {
            tau,
            x0: 1.2,
            a: 0.2,
            b: 0.1,
            n: 10.0,
            raw_len: 800,
            downsample: 2,
            step: 1.0,
        }
    }

    fn rhs(&self, x: f64, delayed: f64) -> f64 {
        self.a * delayed / (1.0 + delayed.powf(self.n)) - self.b * x
    }

    fn steps_per_unit(&self) -> Result<usize> {
        let m = (1.0 / self.step).round();
        if !(self.step > 0.0) || ((1.0 / self.step) - m).abs() > 1e-9 || m < 1.0 {
            return Err(QnirError::InvalidConfig(format!(
                "integration step {} must divide unit time",
                self.step
            )));
        }
        let delay = self.tau * m;
        if self.tau <= 0.0 || (delay - delay.round()).abs() > 1e-9 {
            return Err(QnirError::InvalidConfig(format!(
                "delay {} is not a whole number of steps of {}",
                self.tau, self.step
            )));
        }
        Ok(m as usize)
    }

    /// Integrates with RK4 and returns `x(t)` for `t = 0, 1, …, raw_len − 1`.
    ///
    /// History is constant `x(t) = x0` for `t ≤ 0`. Delayed values between
    /// grid points come from cubic Hermite interpolation of the stored
    /// solution and its derivative.
    pub fn integrate(&self) -> Result<Vec<f64>> {
        let m = self.steps_per_unit()?;
        let delay = (self.tau * m as f64).round() as usize;
        let h = self.step;
        let total = (self.raw_len.max(1) - 1) * m;
        let mut xs = Vec::with_capacity(total + 1);
        let mut fs = Vec::with_capacity(total + 1);
        xs.push(self.x0);

        // x at grid index k − delay + s, s ∈ [0, 1]
        let delayed = |xs: &[f64], fs: &[f64], k: usize, s: f64| -> f64 {
            if k < delay {
                // k − delay + s ≤ 0: constant history
                return self.x0;
            }
            let j = k - delay;
            if s == 0.0 {
                return xs[j];
            }
            hermite(xs[j], fs[j], xs[j + 1], fs[j + 1], h, s)
        };

        for k in 0..total {
            let xk = xs[k];
            let d0 = if k < delay { self.x0 } else { xs[k - delay] };
            let fk = self.rhs(xk, d0);
            fs.push(fk);
            let dh = delayed(&xs, &fs, k, 0.5);
            let d1 = delayed(&xs, &fs, k, 1.0);
            let k1 = fk;
            let k2 = self.rhs(xk + 0.5 * h * k1, dh);
            let k3 = self.rhs(xk + 0.5 * h * k2, dh);
            let k4 = self.rhs(xk + h * k3, d1);
            let next = xk + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !next.is_finite() || next.abs() > 1e6 {
                return Err(QnirError::Divergence {
                    step: k + 1,
                    value: next,
                });
            }
            xs.push(next);
        }
        Ok(xs.into_iter().step_by(m).collect())
    }
}

/// Cubic Hermite interpolation on `[x0, x1]` with slopes `f0, f1`, step `h`.
fn hermite(x0: f64, f0: f64, x1: f64, f1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * x0
        + (s3 - 2.0 * s2 + s) * h * f0
        + (-2.0 * s3 + 3.0 * s2) * x1
        + (s3 - s2) * h * f1
}

/// Downsampled series `x(0), x(d), x(2d), …` (400 samples by default).
pub fn mackey_glass(spec: &MackeyGlassSpec) -> Result<Vec<f64>> {
    let raw = spec.integrate()?;
    Ok(raw.into_iter().step_by(spec.downsample.max(1)).collect())
}

/// I.i.d. uniform probe sequence on `[lo, hi]`.
pub fn mc_probe(len: usize, range: (f64, f64), seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    mc_probe_with(&mut rng, len, range)
}

pub(crate) fn mc_probe_with<R: Rng>(rng: &mut R, len: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    (0..len).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Benchmark {
    Narma2,
    Narma5,
    Narma10,
    Mg19,
    Mg25,
}

impl Benchmark {
    pub const ALL: [Benchmark; 5] = [
        Benchmark::Narma2,
        Benchmark::Narma5,
        Benchmark::Narma10,
        Benchmark::Mg19,
        Benchmark::Mg25,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::Narma2 => "narma2",
            Benchmark::Narma5 => "narma5",
            Benchmark::Narma10 => "narma10",
            Benchmark::Mg19 => "mg19",
            Benchmark::Mg25 => "mg25",
        }
    }

    pub fn is_narma(&self) -> bool {
        matches!(self, Benchmark::Narma2 | Benchmark::Narma5 | Benchmark::Narma10)
    }

    pub fn default_length(&self) -> usize {
        if self.is_narma() {
            NARMA_LENGTH
        } else {
            400
        }
    }

    /// Washout 20; NARMA trains on 20..=80 and tests on 81..=100, MG trains on
    /// 20..=300 and tests on 301..=399 (or the end of a shorter sequence).
    pub fn split_for(&self, len: usize) -> Result<SplitSpec> {
        let last = len.checked_sub(1).ok_or_else(|| QnirError::InvalidConfig("empty task".into()))?;
        let (train_end, test_end) = if self.is_narma() { (80, 100) } else { (300, 399) };
        SplitSpec::new(20, train_end.min(last.saturating_sub(1)), test_end.min(last))
    }

    /// Builds the supervised task with `len` samples (default length when `None`).
    pub fn task(&self, len: Option<usize>) -> Result<TaskBundle> {
        let len = len.unwrap_or(self.default_length());
        let (input, target, spec) = match self {
            Benchmark::Narma2 | Benchmark::Narma5 | Benchmark::Narma10 => {
                let signal = InputSignal::default();
                let u = narma_input(len, &signal);
                let y = match self {
                    Benchmark::Narma2 => narma2(&u)?,
                    Benchmark::Narma5 => narma_general(&u, 5, &NarmaCoefficients::default())?,
                    _ => narma_general(&u, 10, &NarmaCoefficients::default())?,
                };
                (u, y, TaskSource::Narma { signal })
            }
            Benchmark::Mg19 | Benchmark::Mg25 => {
                let tau = if *self == Benchmark::Mg19 { 19.0 } else { 25.0 };
                let mg = MackeyGlassSpec {
                    raw_len: len * 2,
                    ..MackeyGlassSpec::new(tau)
                };
                let (u, y) = mackey_glass_pairs(&mg)?;
                (u, y, TaskSource::MackeyGlass(mg))
            }
        };
        let split = self.split_for(len)?;
        split.check_length(len)?;
        Ok(TaskBundle {
            name: self.name().to_string(),
            input,
            target,
            split,
            source: Some(spec),
        })
    }
}

impl std::str::FromStr for Benchmark {
    type Err = QnirError;

    fn from_str(s: &str) -> Result<Self> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == s.to_ascii_lowercase())
            .ok_or_else(|| QnirError::InvalidConfig(format!("unknown benchmark `{s}`")))
    }
}

impl std::fmt::Display for Benchmark {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Downsampled `(x(t − τ), x(t))` pairs: input is the delayed series, target
/// the current one. Delayed times before 0 read the constant history `x0`.
pub fn mackey_glass_pairs(spec: &MackeyGlassSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let raw = spec.integrate()?;
    let d = spec.downsample.max(1);
    let lag = spec.tau.round() as i64;
    let (mut input, mut target) = (Vec::new(), Vec::new());
    for t in (0..raw.len()).step_by(d) {
        let back = t as i64 - lag;
        input.push(if back < 0 { spec.x0 } else { raw[back as usize] });
        target.push(raw[t]);
    }
    Ok((input, target))
}

/// Generator parameters kept alongside a task for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaskSource {
    Narma { signal: InputSignal },
    MackeyGlass(MackeyGlassSpec),
}

/// Aligned input/target pair with its split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskBundle {
    pub name: String,
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub split: SplitSpec,
    #[serde(default)]
    pub source: Option<TaskSource>,
}

impl TaskBundle {
    pub fn len(&self) -> usize {
        self.input.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input.is_empty()
    }

    /// Smallest and largest input value.
    pub fn input_range(&self) -> (f64, f64) {
        self.input
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "u", "y"])?;
        for (t, (u, y)) in self.input.iter().zip(&self.target).enumerate() {
            w.write_record([t.to_string(), u.to_string(), y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `t,u,y` rows; the split comes from the caller (usually the sidecar).
    pub fn read_csv<R: std::io::Read>(reader: R, name: &str, split: SplitSpec) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let (mut input, mut target) = (Vec::new(), Vec::new());
        for rec in r.deserialize::<(usize, f64, f64)>() {
            let (_, u, y) = rec?;
            input.push(u);
            target.push(y);
        }
        split.check_length(input.len())?;
        Ok(Self {
            name: name.to_string(),
            input,
            target,
            split,
            source: None,
        })
    }
}
