use rand::Rng;

use super::state::StateVector;
use crate::error::{Error, Result};

/// Result of a projective measurement of some qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    /// Bit `j` holds the value read on `qubits[j]`.
    pub outcome: usize,
    /// Pre-measurement weight of the outcome subspace.
    pub probability: f64,
    pub collapsed: StateVector,
}

fn check_qubits(state: &StateVector, qubits: &[usize]) -> Result<()> {
    let width = state.qubit_count();
    let mut seen = 0usize;
    for &q in qubits {
        if q >= width {
            return Err(Error::QubitOutOfRange { qubit: q, width });
        }
        if seen & (1 << q) != 0 {
            return Err(Error::DuplicateQubit(q));
        }
        seen |= 1 << q;
    }
    Ok(())
}

#[inline]
fn read_outcome(index: usize, qubits: &[usize]) -> usize {
    qubits.iter().enumerate().fold(0, |acc, (j, &q)| acc | (((index >> q) & 1) << j))
}

/// Exact marginal distribution over the `2^k` outcomes of `qubits`.
pub fn marginal_distribution(state: &StateVector, qubits: &[usize]) -> Result<Vec<f64>> {
    check_qubits(state, qubits)?;
    let mut dist = vec![0.0; 1 << qubits.len()];
    for (i, amp) in state.amplitudes().iter().enumerate() {
        dist[read_outcome(i, qubits)] += amp.norm_sqr();
    }
    Ok(dist)
}

/// `(p0, p1)` for one qubit, without collapse.
pub fn branch_probabilities(state: &StateVector, qubit: usize) -> Result<(f64, f64)> {
    let dist = marginal_distribution(state, &[qubit])?;
    Ok((dist[0], dist[1]))
}

/// Projects onto `qubits = outcome` and renormalizes. Returns the weight of the
/// outcome subspace along with the projected state.
pub fn postselect(state: &StateVector, qubits: &[usize], outcome: usize) -> Result<(f64, StateVector)> {
    check_qubits(state, qubits)?;
    if outcome >= 1 << qubits.len() {
        return Err(Error::InvalidParameter(format!("outcome {outcome} has too many bits")));
    }
    let mut amps = state.amplitudes().to_vec();
    let mut weight = 0.0;
    for (i, amp) in amps.iter_mut().enumerate() {
        if read_outcome(i, qubits) == outcome {
            weight += amp.norm_sqr();
        } else {
            *amp = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    if weight == 0.0 {
        return Err(Error::InvalidState(format!("outcome {outcome} has zero probability")));
    }
    Ok((weight, StateVector::from_unnormalized(amps)?))
}

/// Samples an outcome from the exact marginal and collapses onto it.
pub fn measure<R: Rng + ?Sized>(state: &StateVector, qubits: &[usize], rng: &mut R) -> Result<MeasurementRecord> {
    let dist = marginal_distribution(state, qubits)?;
    let outcome = sample_index(&dist, rng);
    let (probability, collapsed) = postselect(state, qubits, outcome)?;
    Ok(MeasurementRecord { outcome, probability, collapsed })
}

/// Inverse-CDF draw from a nonnegative weight table; never returns a
/// zero-weight index.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn basis_state_measures_itself() {
        let s = StateVector::basis(3, 5).unwrap();
        let mut rng = substream(1, 0, 0);
        for _ in 0..20 {
            let rec = measure(&s, &[0, 1, 2], &mut rng).unwrap();
            assert_eq!(rec.outcome, 5);
            assert_eq!(rec.probability, 1.0);
            assert_eq!(rec.collapsed, s);
        }
    }

    #[test]
    fn basis_branch_probabilities() {
        let s = StateVector::basis(2, 2).unwrap();
        assert_eq!(branch_probabilities(&s, 0).unwrap(), (1.0, 0.0));
        assert_eq!(branch_probabilities(&s, 1).unwrap(), (0.0, 1.0));
        let plus = StateVector::from_real(&[1.0, 1.0]).unwrap();
        let (p0, p1) = branch_probabilities(&plus, 0).unwrap();
        assert!((p0 - 0.5).abs() < 1e-15 && (p1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_qubit_lists() {
        let s = StateVector::zero(2).unwrap();
        let mut rng = substream(0, 0, 0);
        assert_eq!(measure(&s, &[2], &mut rng).unwrap_err(), Error::QubitOutOfRange { qubit: 2, width: 2 });
        assert_eq!(measure(&s, &[1, 1], &mut rng).unwrap_err(), Error::DuplicateQubit(1));
    }

    #[test]
    fn outcome_bits_follow_qubit_order() {
        // |q2 q1 q0⟩ = |110⟩; reading [2, 0] gives bit0 = 1, bit1 = 0.
        let s = StateVector::basis(3, 0b110).unwrap();
        let mut rng = substream(0, 0, 0);
        assert_eq!(measure(&s, &[2, 0], &mut rng).unwrap().outcome, 0b01);
    }

    #[test]
    fn seeded_runs_repeat() {
        let s = StateVector::from_real(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let run = |seed| {
            let mut rng = substream(seed, 0, 0);
            (0..50).map(|_| measure(&s, &[0, 1], &mut rng).unwrap().outcome).collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
    }
}
