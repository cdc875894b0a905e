use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::build_grover_operator;
use crate::error::{Error, Result};
use crate::models::HypothesisSet;
use crate::quantum::{marginal_distribution, sample_index, Circuit, Gate, QubitRange, MAX_QUBITS};

/// Angle read off the phase-estimation register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleEstimate {
    /// Folded estimate `ϑ̃ ∈ (0, π]`.
    pub theta: f64,
    /// Raw register outcome `y`.
    pub outcome: usize,
    pub bits: u32,
    pub epsilon: f64,
    pub ancillas: u32,
    /// Accuracy promised with probability `1 − ε`: `2π·2^{−m}`.
    pub delta: f64,
}

impl AngleEstimate {
    /// Lower bound on the elimination fidelity when the true error is `error`.
    pub fn fidelity_bound(&self, error: f64) -> f64 {
        fidelity_bound(self.theta, error)
    }
}

/// `1 − (π Δϑ / (2ϑ̃))²`.
pub fn fidelity_bound(theta_estimate: f64, error: f64) -> f64 {
    let x = PI * error / (2.0 * theta_estimate);
    1.0 - x * x
}

/// `t = m + ⌈log₂(2 + 1/(2ε))⌉`.
pub fn ancilla_count(bits: u32, epsilon: f64) -> Result<u32> {
    if bits == 0 {
        return Err(Error::InvalidParameter("accuracy must be at least one bit".into()));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidParameter(format!("failure budget ε = {epsilon} outside (0, 1/2)")));
    }
    Ok(bits + (2.0 + 1.0 / (2.0 * epsilon)).log2().ceil() as u32)
}

/// `2π·min(y, 2^t − y)/2^t`. The outcome `0` maps to half a grid step so the
/// estimate stays usable as a divisor.
pub fn fold_outcome(outcome: usize, ancillas: u32) -> f64 {
    let n = 1usize << ancillas;
    let k = outcome.min(n - outcome);
    if k == 0 {
        PI / n as f64
    } else {
        2.0 * PI * k as f64 / n as f64
    }
}

/// The phase-estimation circuit for one `(U, favored, m, ε)` together with the
/// exact distribution of its readout, so repeated trials only sample.
#[derive(Clone, Debug)]
pub struct PhaseEstimator {
    circuit: Circuit,
    bits: u32,
    epsilon: f64,
    ancillas: u32,
    distribution: Vec<f64>,
}

impl PhaseEstimator {
    pub fn new(prepare: &Circuit, favored: &HypothesisSet, bits: u32, epsilon: f64) -> Result<Self> {
        let ancillas = ancilla_count(bits, epsilon)?;
        let n = prepare.width();
        let t = ancillas as usize;
        if n + t > MAX_QUBITS {
            return Err(Error::InvalidParameter(format!("{n} register and {t} ancilla qubits exceed {MAX_QUBITS}")));
        }
        let op = build_grover_operator(prepare, favored, PI, PI)?;

        let mut circuit = Circuit::new(n + t);
        circuit.push(prepare.clone().into_gate())?;
        for j in 0..t {
            circuit.push(Gate::hadamard(n + j))?;
        }
        let mut power = op.circuit().clone();
        for j in 0..t {
            circuit.push(Gate::controlled(n + j, power.clone().into_gate())?)?;
            if j + 1 < t {
                power = power.power(2);
            }
        }
        circuit.push(Gate::InverseQft { range: QubitRange::new(n, t) })?;

        let readout: Vec<usize> = (n..n + t).collect();
        let distribution = marginal_distribution(&circuit.prepare()?, &readout)?;
        Ok(Self { circuit, bits, epsilon, ancillas, distribution })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn ancillas(&self) -> u32 {
        self.ancillas
    }

    /// Exact probability of each readout `y`.
    pub fn distribution(&self) -> &[f64] {
        &self.distribution
    }

    pub fn estimate(&self, outcome: usize) -> AngleEstimate {
        AngleEstimate {
            theta: fold_outcome(outcome, self.ancillas),
            outcome,
            bits: self.bits,
            epsilon: self.epsilon,
            ancillas: self.ancillas,
            delta: 2.0 * PI * 0.5f64.powi(self.bits as i32),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> AngleEstimate {
        self.estimate(sample_index(&self.distribution, rng))
    }

    /// Exact probability that the folded estimate misses `theta` by more
    /// than `2π·2^{−m}`.
    pub fn failure_probability(&self, theta: f64) -> f64 {
        let delta = 2.0 * PI * 0.5f64.powi(self.bits as i32);
        self.distribution
            .iter()
            .enumerate()
            .filter(|(y, _)| (fold_outcome(*y, self.ancillas) - theta).abs() > delta)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Runs phase estimation once and folds the readout into an angle.
pub fn estimate_theta<R: Rng + ?Sized>(
    prepare: &Circuit,
    favored: &HypothesisSet,
    bits: u32,
    epsilon: f64,
    rng: &mut R,
) -> Result<AngleEstimate> {
    Ok(PhaseEstimator::new(prepare, favored, bits, epsilon)?.sample(rng))
}
