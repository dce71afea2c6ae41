use num_complex::Complex64;

use super::gate::Matrix2;
use crate::error::{QnirError, Result};

/// Tolerance for `Σ K†K = I` on constructed operator sets.
pub const CPTP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
enum ChannelKind {
    /// Reset to `|0⟩` with the stored probability.
    Reset(f64),
    General,
}

/// A single-qubit CPTP map given by its Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    operators: Vec<Matrix2>,
    kind: ChannelKind,
}

impl KrausChannel {
    /// Builds a channel from arbitrary Kraus operators, rejecting sets that
    /// are not trace preserving.
    pub fn new(operators: Vec<Matrix2>) -> Result<Self> {
        let deviation = completeness_error(&operators);
        if operators.is_empty() || deviation > CPTP_TOLERANCE {
            return Err(QnirError::NotTracePreserving { deviation });
        }
        Ok(Self {
            operators,
            kind: ChannelKind::General,
        })
    }

    /// Reset-to-`|0⟩` noise: `ρ ↦ p|0⟩⟨0| + (1−p)ρ` on one qubit.
    ///
    /// Kraus set `{√(1−p)·I, √p·|0⟩⟨0|, √p·|0⟩⟨1|}`.
    pub fn reset(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(QnirError::InvalidProbability(p));
        }
        let zero = Complex64::new(0.0, 0.0);
        let keep = Complex64::new((1.0 - p).sqrt(), 0.0);
        let jump = Complex64::new(p.sqrt(), 0.0);
        Ok(Self {
            operators: vec![
                [keep, zero, zero, keep],
                [jump, zero, zero, zero],
                [zero, jump, zero, zero],
            ],
            kind: ChannelKind::Reset(p),
        })
    }

    pub fn operators(&self) -> &[Matrix2] {
        &self.operators
    }

    /// Reset probability for reset channels.
    pub fn reset_probability(&self) -> Option<f64> {
        match self.kind {
            ChannelKind::Reset(p) => Some(p),
            ChannelKind::General => None,
        }
    }

    pub fn completeness_error(&self) -> f64 {
        completeness_error(&self.operators)
    }
}

/// `max |Σ K†K − I|` over entries.
pub fn completeness_error(operators: &[Matrix2]) -> f64 {
    let mut sum = [Complex64::new(0.0, 0.0); 4];
    for k in operators {
        for r in 0..2 {
            for c in 0..2 {
                // (K†K)[r][c] = Σ_m conj(K[m][r]) K[m][c]
                sum[r * 2 + c] += k[r].conj() * k[c] + k[2 + r].conj() * k[2 + c];
            }
        }
    }
    let mut worst: f64 = 0.0;
    for (i, s) in sum.iter().enumerate() {
        let expected = if i == 0 || i == 3 { 1.0 } else { 0.0 };
        worst = worst.max((s - Complex64::new(expected, 0.0)).norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_is_cptp_across_range() {
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let ch = KrausChannel::reset(p).unwrap();
            assert!(ch.completeness_error() < CPTP_TOLERANCE);
            assert_eq!(ch.reset_probability(), Some(p));
        }
    }

    #[test]
    fn reset_rejects_out_of_range() {
        assert!(matches!(
            KrausChannel::reset(1.5),
            Err(QnirError::InvalidProbability(_))
        ));
        assert!(KrausChannel::reset(-0.01).is_err());
        assert!(KrausChannel::reset(f64::NAN).is_err());
    }

    #[test]
    fn non_cptp_set_rejected() {
        let half = Complex64::new(0.5, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let err = KrausChannel::new(vec![[half, zero, zero, half]]).unwrap_err();
        assert!(matches!(err, QnirError::NotTracePreserving { .. }));
    }

    #[test]
    fn amplitude_damping_accepted() {
        let g: f64 = 0.3;
        let z = Complex64::new(0.0, 0.0);
        let k0 = [Complex64::new(1.0, 0.0), z, z, Complex64::new((1.0 - g).sqrt(), 0.0)];
        let k1 = [z, Complex64::new(g.sqrt(), 0.0), z, z];
        assert!(KrausChannel::new(vec![k0, k1]).is_ok());
    }
}
