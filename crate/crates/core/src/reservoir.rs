//! Noisy reservoir circuits and their `⟨Z⟩` feature signals.
//!
//! One time step encodes the input `u_t` as the angle `θ = φ(u_t)` of an
//! `RX` layer followed by `RZZ(θ) = CX·RZ_j(θ)·CX` entanglers. Every gate is
//! followed by a reset channel on each qubit it touches, so a pair costs
//! seven channels (`RX`, `RX`, then CX ×2, RZ, CX ×2) and the register costs
//! `n + 5·pairs` probabilities.
//!
//! Probabilities are numbered qubit-major: all channels on qubit 0 in time
//! order, then qubit 1, and so on. For two qubits this gives
//!
//! ```text
//! q0: RX p0 ─●─ p1 ──────────●─ p2
//! q1: RX p3 ─X─ p4 ─RZ─ p5 ──X─ p6
//! ```
//!
//! and a pair-separable register uses one contiguous block of seven per pair.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{QnirError, Result};
use crate::parallel;
use crate::quantum::{DensityMatrix, Gate, KrausChannel, MAX_FULL_REGISTER_QUBITS};

/// Channels per entangled pair in a pair-separable register.
pub const CHANNELS_PER_PAIR: usize = 7;

/// Default washout length in time steps.
pub const DEFAULT_WASHOUT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntanglementScheme {
    /// Entanglers on disjoint pairs `(0,1), (2,3), …`.
    #[serde(rename = "ps")]
    PairSeparable,
    /// Entangler chain `(0,1), (1,2), …`, one per layer.
    #[serde(rename = "le")]
    LinearEntanglement,
}

impl EntanglementScheme {
    pub fn pairs(&self, qubits: usize) -> Vec<(usize, usize)> {
        match self {
            EntanglementScheme::PairSeparable => (0..qubits / 2).map(|k| (2 * k, 2 * k + 1)).collect(),
            EntanglementScheme::LinearEntanglement => {
                (0..qubits.saturating_sub(1)).map(|i| (i, i + 1)).collect()
            }
        }
    }
}

impl std::str::FromStr for EntanglementScheme {
    type Err = QnirError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ps" | "pair-separable" => Ok(EntanglementScheme::PairSeparable),
            "le" | "linear" | "linear-entanglement" => Ok(EntanglementScheme::LinearEntanglement),
            other => Err(QnirError::InvalidConfig(format!("unknown entanglement scheme `{other}`"))),
        }
    }
}

impl std::fmt::Display for EntanglementScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EntanglementScheme::PairSeparable => f.write_str("ps"),
            EntanglementScheme::LinearEntanglement => f.write_str("le"),
        }
    }
}

/// Affine encoding `θ = scale·u + offset` (radians per data unit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingMap {
    pub scale: f64,
    pub offset: f64,
}

impl Default for ScalingMap {
    fn default() -> Self {
        Self {
            scale: 1.0,
            offset: 0.0,
        }
    }
}

impl ScalingMap {
    pub fn angle(&self, u: f64) -> f64 {
        self.scale * u + self.offset
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirConfig {
    pub qubits: usize,
    pub scheme: EntanglementScheme,
    #[serde(default)]
    pub scaling: ScalingMap,
    #[serde(default = "default_washout")]
    pub washout: usize,
}

fn default_washout() -> usize {
    DEFAULT_WASHOUT
}

impl ReservoirConfig {
    pub fn new(qubits: usize, scheme: EntanglementScheme) -> Self {
        Self {
            qubits,
            scheme,
            scaling: ScalingMap::default(),
            washout: DEFAULT_WASHOUT,
        }
    }

    pub fn pair_separable(qubits: usize) -> Self {
        Self::new(qubits, EntanglementScheme::PairSeparable)
    }

    pub fn linear(qubits: usize) -> Self {
        Self::new(qubits, EntanglementScheme::LinearEntanglement)
    }

    pub fn validate(&self) -> Result<()> {
        match self.scheme {
            EntanglementScheme::PairSeparable if self.qubits < 2 || self.qubits % 2 != 0 => Err(
                QnirError::InvalidConfig(format!("pair-separable scheme needs an even qubit count ≥ 2, got {}", self.qubits)),
            ),
            EntanglementScheme::LinearEntanglement if self.qubits < 2 => Err(QnirError::InvalidConfig(
                format!("linear entanglement needs at least 2 qubits, got {}", self.qubits),
            )),
            _ if !self.scaling.scale.is_finite() || !self.scaling.offset.is_finite() => {
                Err(QnirError::InvalidConfig("non-finite scaling map".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.scheme.pairs(self.qubits)
    }

    /// Number of reset probabilities: `7n/2` for PS, `6n − 5` for LE.
    pub fn parameter_count(&self) -> usize {
        self.qubits + 5 * self.pairs().len()
    }
}

/// Per-channel reset probabilities, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct NoiseParams(Vec<f64>);

impl NoiseParams {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(QnirError::InvalidProbability(bad));
        }
        Ok(Self(values))
    }

    pub fn constant(len: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for NoiseParams {
    type Error = QnirError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<NoiseParams> for Vec<f64> {
    fn from(p: NoiseParams) -> Self {
        p.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Rx(usize),
    Rz(usize),
    Cx(usize, usize),
    Reset { qubit: usize, slot: usize },
}

/// Gate/channel template of one time step, independent of `u_t` and `p`.
#[derive(Debug, Clone)]
pub struct CircuitLayout {
    qubits: usize,
    ops: Vec<Op>,
    slots: usize,
}

impl CircuitLayout {
    pub fn new(cfg: &ReservoirConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.qubits;
        // time-ordered ops; reset slots are filled in afterwards
        let mut timeline: Vec<Op> = Vec::new();
        let reset = |qubit| Op::Reset { qubit, slot: usize::MAX };
        for q in 0..n {
            timeline.push(Op::Rx(q));
            timeline.push(reset(q));
        }
        for (i, j) in cfg.pairs() {
            timeline.extend([Op::Cx(i, j), reset(i), reset(j)]);
            timeline.extend([Op::Rz(j), reset(j)]);
            timeline.extend([Op::Cx(i, j), reset(i), reset(j)]);
        }

        let mut per_qubit = vec![0usize; n];
        for op in &timeline {
            if let Op::Reset { qubit, .. } = op {
                per_qubit[*qubit] += 1;
            }
        }
        let mut next: Vec<usize> = per_qubit
            .iter()
            .scan(0, |acc, &count| {
                let start = *acc;
                *acc += count;
                Some(start)
            })
            .collect();
        for op in &mut timeline {
            if let Op::Reset { qubit, slot } = op {
                *slot = next[*qubit];
                next[*qubit] += 1;
            }
        }
        let slots = per_qubit.iter().sum();
        debug_assert_eq!(slots, cfg.parameter_count());
        Ok(Self {
            qubits: n,
            ops: timeline,
            slots,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.slots
    }

    /// Reset-channel slots in time order, paired with their qubit.
    pub fn channel_slots(&self) -> Vec<(usize, usize)> {
        self.ops
            .iter()
            .filter_map(|op| match op {
                Op::Reset { qubit, slot } => Some((*qubit, *slot)),
                _ => None,
            })
            .collect()
    }
}

/// One instruction of a concrete time step.
#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    Gate(Gate),
    /// Reset channel on `qubit` driven by probability `p[slot]`.
    Channel {
        qubit: usize,
        slot: usize,
        channel: KrausChannel,
    },
}

fn check_params(expected: usize, p: &NoiseParams) -> Result<()> {
    if p.len() != expected {
        return Err(QnirError::LengthMismatch {
            expected,
            actual: p.len(),
        });
    }
    Ok(())
}

/// Ordered gate/channel list for the step that encodes `u`.
pub fn build_step(u: f64, cfg: &ReservoirConfig, p: &NoiseParams) -> Result<Vec<Instruction>> {
    let layout = CircuitLayout::new(cfg)?;
    check_params(layout.slots, p)?;
    let theta = cfg.scaling.angle(u);
    layout
        .ops
        .iter()
        .map(|op| {
            Ok(match *op {
                Op::Rx(q) => Instruction::Gate(Gate::rx(q, theta)),
                Op::Rz(q) => Instruction::Gate(Gate::rz(q, theta)),
                Op::Cx(c, t) => Instruction::Gate(Gate::cx(c, t)),
                Op::Reset { qubit, slot } => Instruction::Channel {
                    qubit,
                    slot,
                    channel: KrausChannel::reset(p.as_slice()[slot])?,
                },
            })
        })
        .collect()
}

/// A reservoir with fixed noise, ready to be driven by an input sequence.
#[derive(Debug, Clone)]
pub struct Reservoir {
    cfg: ReservoirConfig,
    layout: CircuitLayout,
    channels: Vec<KrausChannel>,
}

impl Reservoir {
    pub fn new(cfg: &ReservoirConfig, p: &NoiseParams) -> Result<Self> {
        let layout = CircuitLayout::new(cfg)?;
        check_params(layout.slots, p)?;
        let channels = p
            .as_slice()
            .iter()
            .map(|&pi| KrausChannel::reset(pi))
            .collect::<Result<_>>()?;
        Ok(Self {
            cfg: *cfg,
            layout,
            channels,
        })
    }

    pub fn config(&self) -> &ReservoirConfig {
        &self.cfg
    }

    /// Applies the step channel for input `u` in place.
    pub fn apply_step(&self, rho: &mut DensityMatrix, u: f64) -> Result<()> {
        if rho.qubits() != self.layout.qubits {
            return Err(QnirError::LengthMismatch {
                expected: self.layout.qubits,
                actual: rho.qubits(),
            });
        }
        let theta = self.cfg.scaling.angle(u);
        for op in &self.layout.ops {
            match *op {
                Op::Rx(q) => rho.apply_gate(&Gate::rx(q, theta))?,
                Op::Rz(q) => rho.apply_gate(&Gate::rz(q, theta))?,
                Op::Cx(c, t) => rho.apply_gate(&Gate::cx(c, t))?,
                Op::Reset { qubit, slot } => rho.apply_channel(&self.channels[slot], qubit)?,
            }
        }
        Ok(())
    }

    /// Drives `rho` through `inputs`, recording `⟨Z_i⟩` after every step.
    pub fn run_from(&self, mut rho: DensityMatrix, inputs: &[f64]) -> Result<FeatureMatrix> {
        let n = self.layout.qubits;
        let mut data = vec![0.0; n * inputs.len()];
        for (t, &u) in inputs.iter().enumerate() {
            self.apply_step(&mut rho, u)?;
            for (q, z) in rho.expect_z_all().into_iter().enumerate() {
                data[q * inputs.len() + t] = z;
            }
        }
        FeatureMatrix::new(n, inputs.len(), data, self.cfg.washout)
    }
}

/// Applies one step and measures every qubit without collapsing the state.
pub fn evolve_step(
    rho: &mut DensityMatrix,
    u: f64,
    cfg: &ReservoirConfig,
    p: &NoiseParams,
) -> Result<Vec<f64>> {
    Reservoir::new(cfg, p)?.apply_step(rho, u)?;
    Ok(rho.expect_z_all())
}

fn check_length(cfg: &ReservoirConfig, inputs: &[f64]) -> Result<()> {
    if inputs.len() < cfg.washout + 2 {
        return Err(QnirError::InvalidConfig(format!(
            "sequence of {} steps is too short for a washout of {}",
            inputs.len(),
            cfg.washout
        )));
    }
    Ok(())
}

/// Full-register simulation starting from `|+⟩^⊗n`.
pub fn run_reservoir(inputs: &[f64], cfg: &ReservoirConfig, p: &NoiseParams) -> Result<FeatureMatrix> {
    check_length(cfg, inputs)?;
    if cfg.qubits > MAX_FULL_REGISTER_QUBITS {
        return Err(QnirError::TooManyQubits {
            requested: cfg.qubits,
            max: MAX_FULL_REGISTER_QUBITS,
        });
    }
    let reservoir = Reservoir::new(cfg, p)?;
    reservoir.run_from(DensityMatrix::plus_state(cfg.qubits)?, inputs)
}

/// Pair-separable fast path: `n/2` independent two-qubit blocks.
///
/// Block `k` owns qubits `(2k, 2k+1)` and probabilities `p[7k..7k+7]`.
pub fn run_reservoir_ps_blocks(
    inputs: &[f64],
    cfg: &ReservoirConfig,
    p: &NoiseParams,
) -> Result<FeatureMatrix> {
    if cfg.scheme != EntanglementScheme::PairSeparable {
        return Err(QnirError::InvalidConfig(
            "block simulation requires the pair-separable scheme".into(),
        ));
    }
    cfg.validate()?;
    check_length(cfg, inputs)?;
    check_params(cfg.parameter_count(), p)?;
    let block_cfg = ReservoirConfig {
        qubits: 2,
        ..*cfg
    };
    let chunks: Vec<&[f64]> = p.as_slice().chunks(CHANNELS_PER_PAIR).collect();
    let blocks = parallel::map(&chunks, |chunk| {
        let block_p = NoiseParams::new(chunk.to_vec())?;
        Reservoir::new(&block_cfg, &block_p)?.run_from(DensityMatrix::plus_state(2)?, inputs)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::stack(&blocks)
}

/// Runs the cheapest exact simulation for the scheme.
pub fn simulate(inputs: &[f64], cfg: &ReservoirConfig, p: &NoiseParams) -> Result<FeatureMatrix> {
    match cfg.scheme {
        EntanglementScheme::PairSeparable => run_reservoir_ps_blocks(inputs, cfg, p),
        EntanglementScheme::LinearEntanglement => run_reservoir(inputs, cfg, p),
    }
}

/// `n × N` matrix of `⟨Z_i⟩` signals; column `t` is the state after step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    len: usize,
    data: Vec<f64>,
    washout: usize,
}

impl FeatureMatrix {
    pub fn new(rows: usize, len: usize, data: Vec<f64>, washout: usize) -> Result<Self> {
        if data.len() != rows * len {
            return Err(QnirError::LengthMismatch {
                expected: rows * len,
                actual: data.len(),
            });
        }
        Ok(Self {
            rows,
            len,
            data,
            washout,
        })
    }

    /// Stacks blocks with equal length vertically.
    pub fn stack(blocks: &[FeatureMatrix]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| QnirError::InvalidConfig("nothing to stack".into()))?;
        let mut data = Vec::with_capacity(blocks.iter().map(|b| b.data.len()).sum());
        for b in blocks {
            if b.len != first.len {
                return Err(QnirError::LengthMismatch {
                    expected: first.len,
                    actual: b.len,
                });
            }
            data.extend_from_slice(&b.data);
        }
        Self::new(data.len() / first.len.max(1), first.len, data, first.washout)
    }

    /// Number of signals (qubits).
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of time steps.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn washout(&self) -> usize {
        self.washout
    }

    pub fn is_washout(&self, t: usize) -> bool {
        t < self.washout
    }

    pub fn signal(&self, row: usize) -> &[f64] {
        &self.data[row * self.len..(row + 1) * self.len]
    }

    pub fn value(&self, row: usize, t: usize) -> f64 {
        self.data[row * self.len + t]
    }

    pub fn column(&self, t: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.value(r, t)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True when every signal is numerically zero (e.g. a noiseless reservoir).
    pub fn is_degenerate(&self) -> bool {
        self.max_abs() < 1e-10
    }

    /// Writes `signal,0,1,…` then one row per qubit, plus a `bias` row of ones
    /// when `bias` is set.
    pub fn write_csv<W: Write>(&self, writer: W, bias: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["signal".to_string()];
        header.extend((0..self.len).map(|t| t.to_string()));
        w.write_record(&header)?;
        for r in 0..self.rows {
            let mut rec = vec![format!("q{r}")];
            rec.extend(self.signal(r).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        if bias {
            let mut rec = vec!["bias".to_string()];
            rec.extend((0..self.len).map(|_| "1".to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_counts() {
        for n in [2, 4, 6, 8, 10, 12] {
            assert_eq!(ReservoirConfig::pair_separable(n).parameter_count(), 7 * n / 2);
            assert_eq!(ReservoirConfig::linear(n).parameter_count(), 6 * n - 5);
        }
        assert_eq!(ReservoirConfig::pair_separable(12).parameter_count(), 42);
        assert_eq!(ReservoirConfig::linear(12).parameter_count(), 67);
        assert_eq!(ReservoirConfig::pair_separable(32).parameter_count(), 112);
    }

    #[test]
    fn pairs_per_scheme() {
        assert_eq!(EntanglementScheme::PairSeparable.pairs(6), vec![(0, 1), (2, 3), (4, 5)]);
        assert_eq!(
            EntanglementScheme::LinearEntanglement.pairs(4),
            vec![(0, 1), (1, 2), (2, 3)]
        );
    }

    #[test]
    fn invalid_configs() {
        assert!(ReservoirConfig::pair_separable(3).validate().is_err());
        assert!(ReservoirConfig::pair_separable(0).validate().is_err());
        assert!(ReservoirConfig::linear(1).validate().is_err());
        assert!(ReservoirConfig::linear(3).validate().is_ok());
    }

    #[test]
    fn two_qubit_layout_follows_figure_numbering() {
        let cfg = ReservoirConfig::pair_separable(2);
        let p = NoiseParams::new((0..7).map(|i| i as f64 / 10.0).collect()).unwrap();
        let steps = build_step(0.3, &cfg, &p).unwrap();
        let channels: Vec<(usize, usize)> = steps
            .iter()
            .filter_map(|ins| match ins {
                Instruction::Channel { qubit, slot, .. } => Some((*qubit, *slot)),
                _ => None,
            })
            .collect();
        // time order: RX q0, RX q1, CX (q0,q1), RZ q1, CX (q0,q1)
        assert_eq!(channels, vec![(0, 0), (1, 3), (0, 1), (1, 4), (1, 5), (0, 2), (1, 6)]);
        let gates: Vec<Gate> = steps
            .iter()
            .filter_map(|ins| match ins {
                Instruction::Gate(g) => Some(*g),
                _ => None,
            })
            .collect();
        assert_eq!(
            gates,
            vec![Gate::rx(0, 0.3), Gate::rx(1, 0.3), Gate::cx(0, 1), Gate::rz(1, 0.3), Gate::cx(0, 1)]
        );
    }

    #[test]
    fn ps_slots_are_contiguous_per_pair() {
        let layout = CircuitLayout::new(&ReservoirConfig::pair_separable(6)).unwrap();
        for (qubit, slot) in layout.channel_slots() {
            assert_eq!(slot / CHANNELS_PER_PAIR, qubit / 2);
        }
        assert_eq!(build_step(0.1, &ReservoirConfig::pair_separable(12), &NoiseParams::constant(42, 0.1).unwrap())
            .unwrap()
            .iter()
            .filter(|i| matches!(i, Instruction::Channel { .. }))
            .count(), 42);
    }

    #[test]
    fn le_slot_counts_per_qubit() {
        let layout = CircuitLayout::new(&ReservoirConfig::linear(5)).unwrap();
        let mut per_qubit = [0; 5];
        for (q, _) in layout.channel_slots() {
            per_qubit[q] += 1;
        }
        assert_eq!(per_qubit, [3, 6, 6, 6, 4]);
        assert_eq!(layout.parameter_count(), 25);
    }

    #[test]
    fn length_mismatch_rejected() {
        let cfg = ReservoirConfig::pair_separable(2);
        let p = NoiseParams::constant(6, 0.5).unwrap();
        assert!(matches!(
            build_step(0.1, &cfg, &p),
            Err(QnirError::LengthMismatch { expected: 7, actual: 6 })
        ));
    }

    #[test]
    fn noise_params_bounds() {
        assert!(NoiseParams::new(vec![0.0, 1.0, 0.5]).is_ok());
        assert!(NoiseParams::new(vec![0.0, 1.0001]).is_err());
        assert!(serde_json::from_str::<NoiseParams>("[0.2, -0.1]").is_err());
    }

    #[test]
    fn full_reset_pins_features_to_one() {
        let cfg = ReservoirConfig::linear(3);
        let p = NoiseParams::constant(cfg.parameter_count(), 1.0).unwrap();
        let inputs: Vec<f64> = (0..25).map(|t| 0.05 * t as f64).collect();
        let fm = run_reservoir(&inputs, &cfg, &p).unwrap();
        for q in 0..3 {
            assert!(fm.signal(q).iter().all(|z| (z - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn block_path_rejects_le() {
        let cfg = ReservoirConfig::linear(4);
        let p = NoiseParams::constant(cfg.parameter_count(), 0.2).unwrap();
        assert!(run_reservoir_ps_blocks(&[0.1; 30], &cfg, &p).is_err());
    }

    #[test]
    fn short_sequence_rejected() {
        let cfg = ReservoirConfig::pair_separable(2);
        let p = NoiseParams::constant(7, 0.2).unwrap();
        assert!(run_reservoir(&[0.1; 21], &cfg, &p).is_err());
        assert!(run_reservoir(&[0.1; 22], &cfg, &p).is_ok());
    }

    #[test]
    fn csv_layout() {
        let fm = FeatureMatrix::new(2, 3, vec![0.1, 0.2, 0.3, -0.1, -0.2, -0.3], 1).unwrap();
        let mut buf = Vec::new();
        fm.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "signal,0,1,2");
        assert_eq!(lines[1], "q0,0.1,0.2,0.3");
        assert_eq!(lines[3], "bias,1,1,1");
    }
}
