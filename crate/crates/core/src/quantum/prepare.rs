use super::circuit::Circuit;
use super::gate::{Gate, QubitRange};
use crate::error::Result;
use crate::models::PriorDistribution;

/// Table-driven preparation `U|0⟩ = Σ √P(h) |h⟩`.
///
/// Qubits are fixed from the most significant down. Qubit `q` is rotated by
/// an angle that depends on the already-prepared bits above it, splitting the
/// mass of each prefix between its two halves. The cost is exponential in the
/// register width.
pub fn prepare_prior_circuit(prior: &PriorDistribution) -> Result<Circuit> {
    let n = prior.space().qubits();
    let probs = prior.probs();
    let mut circuit = Circuit::new(n);
    for target in (0..n).rev() {
        let controls = QubitRange::new(target + 1, n - 1 - target);
        let half = 1usize << target;
        let angles: Vec<f64> = (0..controls.size())
            .map(|prefix| {
                let base = prefix << (target + 1);
                let low: f64 = probs[base..base + half].iter().sum();
                let high: f64 = probs[base + half..base + 2 * half].iter().sum();
                if high == 0.0 {
                    0.0
                } else {
                    2.0 * high.sqrt().atan2(low.sqrt())
                }
            })
            .collect();
        if angles.iter().all(|a| *a == 0.0) {
            continue;
        }
        circuit.push(Gate::ConditionalRotation { controls, target, angles })?;
    }
    Ok(circuit)
}
