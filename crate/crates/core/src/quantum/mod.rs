//! Dense density-matrix simulation for small registers.
//!
//! Gates and channels are applied in place by walking index strides of the
//! target qubits; no global `2^n × 2^n` operator is ever built.

mod channel;
mod gate;

pub use channel::{completeness_error, KrausChannel, CPTP_TOLERANCE};
pub use gate::{rx_matrix, rz_matrix, unitarity_error, Gate, Matrix2};

use num_complex::Complex64;

use crate::error::{QnirError, Result};

/// Largest register simulated as a single dense matrix (4096 × 4096).
pub const MAX_FULL_REGISTER_QUBITS: usize = 12;

/// Tolerance for trace and hermiticity checks on evolved states.
pub const STATE_TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A mixed state of `n` qubits stored row-major as a `2^n × 2^n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    dim: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    fn check_size(qubits: usize) -> Result<()> {
        if qubits == 0 {
            return Err(QnirError::InvalidConfig("register needs at least one qubit".into()));
        }
        if qubits > MAX_FULL_REGISTER_QUBITS {
            return Err(QnirError::TooManyQubits {
                requested: qubits,
                max: MAX_FULL_REGISTER_QUBITS,
            });
        }
        Ok(())
    }

    /// `|0…0⟩⟨0…0|`.
    pub fn zero_state(qubits: usize) -> Result<Self> {
        Self::check_size(qubits)?;
        let dim = 1usize << qubits;
        let mut data = vec![ZERO; dim * dim];
        data[0] = Complex64::new(1.0, 0.0);
        Ok(Self { qubits, dim, data })
    }

    /// `|+⟩⟨+|^⊗n`: every entry equals `1 / 2^n`.
    pub fn plus_state(qubits: usize) -> Result<Self> {
        Self::check_size(qubits)?;
        let dim = 1usize << qubits;
        let v = Complex64::new(1.0 / dim as f64, 0.0);
        Ok(Self {
            qubits,
            dim,
            data: vec![v; dim * dim],
        })
    }

    /// Tensor product of single-qubit density matrices; `factors[q]` lands on qubit `q`.
    pub fn product_state(factors: &[Matrix2]) -> Result<Self> {
        Self::check_size(factors.len())?;
        let qubits = factors.len();
        let dim = 1usize << qubits;
        let mut data = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                let mut v = Complex64::new(1.0, 0.0);
                for (q, f) in factors.iter().enumerate() {
                    v *= f[((r >> q) & 1) * 2 + ((c >> q) & 1)];
                }
                data[r * dim + c] = v;
            }
        }
        Ok(Self { qubits, dim, data })
    }

    /// Wraps a raw row-major matrix. Only the shape is validated.
    pub fn from_data(qubits: usize, data: Vec<Complex64>) -> Result<Self> {
        Self::check_size(qubits)?;
        let dim = 1usize << qubits;
        if data.len() != dim * dim {
            return Err(QnirError::LengthMismatch {
                expected: dim * dim,
                actual: data.len(),
            });
        }
        Ok(Self { qubits, dim, data })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// `max |ρ − ρ†|` over entries.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.data[r * d + c] - self.data[c * d + r].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part. `O(dim³)`; meant for tests.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim;
        let m = nalgebra::DMatrix::from_fn(d, d, |r, c| {
            (self.data[r * d + c] + self.data[c * d + r].conj()) * 0.5
        });
        m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Largest elementwise distance to another state of the same size.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Convex combination `α·self + (1−α)·other`.
    pub fn mix(&self, other: &DensityMatrix, alpha: f64) -> Result<DensityMatrix> {
        if self.dim != other.dim {
            return Err(QnirError::LengthMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * alpha + b * (1.0 - alpha))
            .collect();
        Ok(DensityMatrix {
            qubits: self.qubits,
            dim: self.dim,
            data,
        })
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.qubits {
            return Err(QnirError::QubitOutOfRange {
                qubit,
                qubits: self.qubits,
            });
        }
        Ok(())
    }

    /// `ρ ← U ρ U†` with `U` the gate embedded on its targets.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        for q in gate.targets() {
            self.check_qubit(q)?;
        }
        match *gate {
            Gate::Rz { qubit, theta } => self.apply_rz(qubit, theta),
            Gate::Cx { control, target } => {
                if control == target {
                    return Err(QnirError::InvalidConfig(format!(
                        "CX control and target coincide on qubit {control}"
                    )));
                }
                self.apply_cx(control, target);
            }
            Gate::Rx { qubit, .. } | Gate::H { qubit } | Gate::X { qubit } => {
                let m = gate.single_qubit_matrix().expect("single-qubit gate");
                conjugate(&mut self.data, self.dim, qubit, &m);
            }
        }
        Ok(())
    }

    fn apply_rz(&mut self, qubit: usize, theta: f64) {
        let d = self.dim;
        let bit = 1usize << qubit;
        let down = Complex64::from_polar(1.0, -theta);
        let up = down.conj();
        for (r, row) in self.data.chunks_exact_mut(d).enumerate() {
            // only entries whose row and column bits differ pick up a phase
            let (offset, phase) = if r & bit == 0 { (bit, down) } else { (0, up) };
            for base in (0..d).step_by(2 * bit) {
                for v in &mut row[base + offset..base + offset + bit] {
                    *v *= phase;
                }
            }
        }
    }

    fn apply_cx(&mut self, control: usize, target: usize) {
        let d = self.dim;
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        // rows: P ρ
        for_each_pair(d, tbit, |r, s| {
            if r & cbit != 0 {
                let (head, tail) = self.data.split_at_mut(s * d);
                head[r * d..(r + 1) * d].swap_with_slice(&mut tail[..d]);
            }
        });
        // columns: (P ρ) P
        for row in self.data.chunks_exact_mut(d) {
            for_each_pair(d, tbit, |c, s| {
                if c & cbit != 0 {
                    row.swap(c, s);
                }
            });
        }
    }

    /// `ρ ← Σ_j K_j ρ K_j†` with the channel acting on `qubit`.
    ///
    /// Reset channels take a closed-form path; all others go through the
    /// Kraus sum of [`DensityMatrix::apply_kraus`].
    pub fn apply_channel(&mut self, channel: &KrausChannel, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        match channel.reset_probability() {
            Some(p) => self.apply_reset(p, qubit),
            None => self.apply_kraus_unchecked(channel, qubit),
        }
        Ok(())
    }

    /// Applies the explicit Kraus sum regardless of channel kind.
    pub fn apply_kraus(&mut self, channel: &KrausChannel, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        self.apply_kraus_unchecked(channel, qubit);
        Ok(())
    }

    fn apply_kraus_unchecked(&mut self, channel: &KrausChannel, qubit: usize) {
        let mut out = vec![ZERO; self.data.len()];
        for k in channel.operators() {
            let mut term = self.data.clone();
            conjugate(&mut term, self.dim, qubit, k);
            for (o, t) in out.iter_mut().zip(term) {
                *o += t;
            }
        }
        self.data = out;
    }

    /// `ρ ← (1−p)ρ + p·|0⟩⟨0|_q ⊗ Tr_q ρ`.
    fn apply_reset(&mut self, p: f64, qubit: usize) {
        if p == 0.0 {
            return;
        }
        let d = self.dim;
        let bit = 1usize << qubit;
        let keep = 1.0 - p;
        for_each_pair(d, bit, |r0, r1| {
            let (head, tail) = self.data.split_at_mut(r1 * d);
            let row0 = &mut head[r0 * d..(r0 + 1) * d];
            let row1 = &mut tail[..d];
            for_each_pair(d, bit, |c0, c1| {
                row0[c0] += row1[c1] * p;
                row0[c1] *= keep;
                row1[c0] *= keep;
                row1[c1] *= keep;
            });
        });
    }

    /// `Tr(Z_q ρ)`.
    pub fn expect_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        Ok(self.expect_z_unchecked(qubit))
    }

    fn expect_z_unchecked(&self, qubit: usize) -> f64 {
        let d = self.dim;
        let mut acc = ZERO;
        for i in 0..d {
            let v = self.data[i * d + i];
            if (i >> qubit) & 1 == 0 {
                acc += v;
            } else {
                acc -= v;
            }
        }
        debug_assert!(acc.im.abs() < 1e-8, "imaginary ⟨Z⟩ residue {}", acc.im);
        acc.re
    }

    /// `⟨Z_q⟩` for every qubit, in index order.
    pub fn expect_z_all(&self) -> Vec<f64> {
        (0..self.qubits).map(|q| self.expect_z_unchecked(q)).collect()
    }
}

/// Calls `f(i, i | bit)` for every index `i < dim` with `bit` clear.
#[inline(always)]
fn for_each_pair(dim: usize, bit: usize, mut f: impl FnMut(usize, usize)) {
    for base in (0..dim).step_by(2 * bit) {
        for i in base..base + bit {
            f(i, i + bit);
        }
    }
}

/// `ρ ← M ρ M†` with `M` acting on `qubit`, one 2×2 block at a time.
fn conjugate(data: &mut [Complex64], dim: usize, qubit: usize, m: &Matrix2) {
    let bit = 1usize << qubit;
    let [m00, m01, m10, m11] = *m;
    let (c00, c01, c10, c11) = (m00.conj(), m01.conj(), m10.conj(), m11.conj());
    for_each_pair(dim, bit, |r0, r1| {
        let (head, tail) = data.split_at_mut(r1 * dim);
        let row0 = &mut head[r0 * dim..(r0 + 1) * dim];
        let row1 = &mut tail[..dim];
        for_each_pair(dim, bit, |j0, j1| {
            let (a, b, c, e) = (row0[j0], row0[j1], row1[j0], row1[j1]);
            // left: M·B
            let (x0, x1) = (m00 * a + m01 * c, m00 * b + m01 * e);
            let (y0, y1) = (m10 * a + m11 * c, m10 * b + m11 * e);
            // right: (M·B)·M†
            row0[j0] = x0 * c00 + x1 * c01;
            row0[j1] = x0 * c10 + x1 * c11;
            row1[j0] = y0 * c00 + y1 * c01;
            row1[j1] = y0 * c10 + y1 * c11;
        });
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn plus_state_entries() {
        let one = DensityMatrix::plus_state(1).unwrap();
        assert!(one.data().iter().all(|v| (v - c(0.5)).norm() < 1e-15));
        assert!(one.expect_z(0).unwrap().abs() < 1e-15);
        let two = DensityMatrix::plus_state(2).unwrap();
        assert_eq!(two.data().len(), 16);
        assert!(two.data().iter().all(|v| (v - c(0.25)).norm() < 1e-15));
    }

    #[test]
    fn plus_state_is_hadamard_layer_on_zero() {
        let mut rho = DensityMatrix::zero_state(3).unwrap();
        for q in 0..3 {
            rho.apply_gate(&Gate::H { qubit: q }).unwrap();
        }
        assert!(rho.max_abs_diff(&DensityMatrix::plus_state(3).unwrap()) < 1e-14);
    }

    #[test]
    fn register_cap_enforced() {
        assert!(matches!(
            DensityMatrix::plus_state(13),
            Err(QnirError::TooManyQubits { requested: 13, max: 12 })
        ));
        assert!(DensityMatrix::zero_state(0).is_err());
    }

    #[test]
    fn rx_rotations() {
        let mut rho = DensityMatrix::zero_state(1).unwrap();
        rho.apply_gate(&Gate::rx(0, PI)).unwrap();
        assert!((rho.expect_z(0).unwrap() + 1.0).abs() < 1e-14);
        for theta in [0.1, 0.7, 2.0, -1.3] {
            let mut rho = DensityMatrix::zero_state(1).unwrap();
            rho.apply_gate(&Gate::rx(0, theta)).unwrap();
            assert!((rho.expect_z(0).unwrap() - theta.cos()).abs() < 1e-14);
        }
    }

    #[test]
    fn cx_truth_table() {
        // qubit 1 is the control and is set: index 0b10 = |q1=1, q0=0⟩
        let mut rho = DensityMatrix::zero_state(2).unwrap();
        rho.apply_gate(&Gate::X { qubit: 1 }).unwrap();
        rho.apply_gate(&Gate::cx(1, 0)).unwrap();
        assert!((rho.entry(3, 3) - c(1.0)).norm() < 1e-15);
        // control clear: nothing happens
        let mut rho = DensityMatrix::zero_state(2).unwrap();
        rho.apply_gate(&Gate::X { qubit: 0 }).unwrap();
        rho.apply_gate(&Gate::cx(1, 0)).unwrap();
        assert!((rho.entry(1, 1) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn out_of_range_qubit() {
        let mut rho = DensityMatrix::zero_state(2).unwrap();
        assert!(matches!(
            rho.apply_gate(&Gate::rx(2, 0.1)),
            Err(QnirError::QubitOutOfRange { qubit: 2, qubits: 2 })
        ));
        assert!(rho.apply_gate(&Gate::cx(0, 0)).is_err());
        assert!(rho.expect_z(5).is_err());
        let ch = KrausChannel::reset(0.2).unwrap();
        assert!(rho.apply_channel(&ch, 3).is_err());
    }

    #[test]
    fn reset_channel_examples() {
        let plus = DensityMatrix::plus_state(1).unwrap();

        let mut rho = plus.clone();
        rho.apply_channel(&KrausChannel::reset(0.0).unwrap(), 0).unwrap();
        assert_eq!(rho, plus);

        let mut rho = plus.clone();
        rho.apply_channel(&KrausChannel::reset(1.0).unwrap(), 0).unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::zero_state(1).unwrap()) < 1e-15);

        let mut one = DensityMatrix::zero_state(1).unwrap();
        one.apply_gate(&Gate::X { qubit: 0 }).unwrap();
        one.apply_channel(&KrausChannel::reset(0.5).unwrap(), 0).unwrap();
        assert!((one.entry(0, 0) - c(0.5)).norm() < 1e-15);
        assert!((one.entry(1, 1) - c(0.5)).norm() < 1e-15);
        assert!(one.expect_z(0).unwrap().abs() < 1e-15);

        // 0.3|0⟩⟨0| + 0.7|+⟩⟨+| = [[0.65, 0.35], [0.35, 0.35]]
        let mut rho = plus;
        rho.apply_channel(&KrausChannel::reset(0.3).unwrap(), 0).unwrap();
        let expected = [0.65, 0.35, 0.35, 0.35];
        for (v, e) in rho.data().iter().zip(expected) {
            assert!((v - c(e)).norm() < 1e-15);
        }
    }

    #[test]
    fn expect_z_of_diagonal_state() {
        let rho = DensityMatrix::from_data(1, vec![c(0.25), c(0.0), c(0.0), c(0.75)]).unwrap();
        assert!((rho.expect_z(0).unwrap() + 0.5).abs() < 1e-15);
        assert!((DensityMatrix::zero_state(1).unwrap().expect_z(0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn product_state_matches_kron() {
        let zero = [c(1.0), c(0.0), c(0.0), c(0.0)];
        let plus = [c(0.5), c(0.5), c(0.5), c(0.5)];
        let rho = DensityMatrix::product_state(&[zero, plus]).unwrap();
        // qubit 0 = |0⟩, qubit 1 = |+⟩
        assert!((rho.expect_z(0).unwrap() - 1.0).abs() < 1e-15);
        assert!(rho.expect_z(1).unwrap().abs() < 1e-15);
        assert!((rho.trace() - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn psd_of_mixed_state() {
        let mut rho = DensityMatrix::plus_state(2).unwrap();
        rho.apply_gate(&Gate::cx(0, 1)).unwrap();
        rho.apply_channel(&KrausChannel::reset(0.4).unwrap(), 1).unwrap();
        assert!(rho.min_eigenvalue() > -1e-12);
    }
}
