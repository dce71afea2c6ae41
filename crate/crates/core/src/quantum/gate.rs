use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

/// Row-major 2×2 complex matrix.
pub type Matrix2 = [Complex64; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Gates used by the reservoir circuits.
///
/// Qubit `q` addresses bit `q` of a basis-state index (little-endian).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rx { qubit: usize, theta: f64 },
    Rz { qubit: usize, theta: f64 },
    H { qubit: usize },
    X { qubit: usize },
    Cx { control: usize, target: usize },
}

impl Gate {
    pub fn rx(qubit: usize, theta: f64) -> Self {
        Gate::Rx { qubit, theta }
    }

    pub fn rz(qubit: usize, theta: f64) -> Self {
        Gate::Rz { qubit, theta }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Gate::Cx { control, target }
    }

    /// Qubits the gate acts on, in matrix order.
    pub fn targets(&self) -> Vec<usize> {
        match *self {
            Gate::Rx { qubit, .. } | Gate::Rz { qubit, .. } | Gate::H { qubit } | Gate::X { qubit } => {
                vec![qubit]
            }
            Gate::Cx { control, target } => vec![control, target],
        }
    }

    /// Single-qubit matrix, or `None` for two-qubit gates.
    pub fn single_qubit_matrix(&self) -> Option<Matrix2> {
        match *self {
            Gate::Rx { theta, .. } => Some(rx_matrix(theta)),
            Gate::Rz { theta, .. } => Some(rz_matrix(theta)),
            Gate::H { .. } => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                Some([h, h, h, -h])
            }
            Gate::X { .. } => Some([ZERO, ONE, ONE, ZERO]),
            Gate::Cx { .. } => None,
        }
    }

    /// Full matrix in the basis `|t0 t1⟩` with local index `2·b(t0) + b(t1)`,
    /// where `t0, t1` are [`Gate::targets`]. Row-major, `dim × dim`.
    pub fn matrix(&self) -> Vec<Complex64> {
        match self.single_qubit_matrix() {
            Some(m) => m.to_vec(),
            None => {
                let mut m = vec![ZERO; 16];
                m[0] = ONE;
                m[5] = ONE;
                m[11] = ONE;
                m[14] = ONE;
                m
            }
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Rx { qubit, theta } => Gate::Rx { qubit, theta: -theta },
            Gate::Rz { qubit, theta } => Gate::Rz { qubit, theta: -theta },
            g => g,
        }
    }
}

pub fn rx_matrix(theta: f64) -> Matrix2 {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = Complex64::new(0.0, -(theta / 2.0).sin());
    [c, s, s, c]
}

pub fn rz_matrix(theta: f64) -> Matrix2 {
    [
        Complex64::from_polar(1.0, -theta / 2.0),
        ZERO,
        ZERO,
        Complex64::from_polar(1.0, theta / 2.0),
    ]
}

/// Largest entry of `|U U† − I|` for a square row-major matrix.
pub fn unitarity_error(m: &[Complex64]) -> f64 {
    let dim = (m.len() as f64).sqrt() as usize;
    let mut worst: f64 = 0.0;
    for r in 0..dim {
        for c in 0..dim {
            let mut acc = ZERO;
            for k in 0..dim {
                acc += m[r * dim + k] * m[c * dim + k].conj();
            }
            let expected = if r == c { ONE } else { ZERO };
            worst = worst.max((acc - expected).norm());
        }
    }
    worst
}
