use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the dense statevector is meant for.
pub const MAX_QUBITS: usize = 24;

/// Absolute tolerance on the squared norm of a state.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Exact statevector over `qubit_count` qubits.
///
/// Basis index `i` encodes qubit `q` in bit `q` of `i` (qubit 0 is the least
/// significant bit), so the hypothesis `h` of an `n`-qubit register is the
/// basis state `|h⟩` and ancillas appended later occupy the high bits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The all-zero basis state `|0…0⟩`.
    pub fn zero(qubits: usize) -> Result<Self> {
        Self::basis(qubits, 0)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        check_width(qubits)?;
        let dim = 1usize << qubits;
        if index >= dim {
            return Err(Error::InvalidState(format!("basis index {index} out of range for {qubits} qubits")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { qubits, amps })
    }

    /// Wraps an amplitude vector that must already be unit-norm.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let qubits = qubits_for_len(amps.len())?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!("squared norm {norm} is not 1")));
        }
        Ok(Self { qubits, amps })
    }

    /// Normalizes an arbitrary nonzero amplitude vector.
    pub fn from_unnormalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let qubits = qubits_for_len(amps.len())?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let scale = 1.0 / norm;
        amps.iter_mut().for_each(|a| *a *= scale);
        Ok(Self { qubits, amps })
    }

    /// Real amplitude vector, normalized.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_unnormalized(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    /// Born-rule probabilities of every basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.qubits != other.qubits {
            return Err(Error::WidthMismatch { expected: self.qubits, found: other.qubits });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// Appends `count` ancilla qubits in `|0⟩` above the current register.
    pub fn with_ancillas(&self, count: usize) -> Result<StateVector> {
        check_width(self.qubits + count)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << (self.qubits + count)];
        amps[..self.amps.len()].copy_from_slice(&self.amps);
        Ok(Self { qubits: self.qubits + count, amps })
    }

    /// Restricts to the low `register` qubits on the block where the high
    /// qubits read `high_value`, renormalized.
    pub fn register_block(&self, register: usize, high_value: usize) -> Result<StateVector> {
        if register == 0 || register > self.qubits {
            return Err(Error::QubitOutOfRange { qubit: register, width: self.qubits });
        }
        let block = 1usize << register;
        let start = high_value
            .checked_mul(block)
            .filter(|s| *s < self.amps.len())
            .ok_or_else(|| Error::InvalidState(format!("high block {high_value} out of range")))?;
        Self::from_unnormalized(self.amps[start..start + block].to_vec())
    }

    /// Largest absolute amplitude difference against `other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64> {
        if self.qubits != other.qubits {
            return Err(Error::WidthMismatch { expected: self.qubits, found: other.qubits });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }
}

/// `|⟨a|b⟩|`, clamped into `[0, 1]`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm().min(1.0))
}

fn check_width(qubits: usize) -> Result<()> {
    if qubits == 0 || qubits > MAX_QUBITS {
        return Err(Error::InvalidState(format!("qubit count {qubits} outside 1..={MAX_QUBITS}")));
    }
    Ok(())
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InvalidState(format!("amplitude count {len} is not a power of two ≥ 2")));
    }
    let qubits = len.trailing_zeros() as usize;
    check_width(qubits)?;
    Ok(qubits)
}
