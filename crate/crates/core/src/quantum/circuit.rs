use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::gate::Gate;
use super::state::StateVector;
use crate::error::{Error, Result};

/// Composites up to this width are compiled once into a dense unitary and
/// applied as a matrix. Nested Grover operators reference their preparation
/// circuit several times per level, so without this the cost of a staged
/// pipeline grows geometrically with the number of stages.
pub const DENSE_MAX_QUBITS: usize = 8;

/// Ordered gate sequence over a register of `width` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCircuit")]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
}

#[derive(Deserialize)]
struct RawCircuit {
    width: usize,
    gates: Vec<Gate>,
}

impl TryFrom<RawCircuit> for Circuit {
    type Error = Error;

    fn try_from(raw: RawCircuit) -> Result<Self> {
        Circuit::from_gates(raw.width, raw.gates)
    }
}

/// Circuit algebra accepted by [`circuit_transform`].
#[derive(Clone, Debug)]
pub enum Transform {
    Inverse,
    Controlled(usize),
    Power(u32),
    Compose(Circuit),
}

impl Circuit {
    /// The identity on `width` qubits.
    pub fn new(width: usize) -> Self {
        Self { width, gates: Vec::new() }
    }

    pub fn from_gates(width: usize, gates: Vec<Gate>) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidParameter("circuit width must be at least 1".into()));
        }
        let mut circuit = Self::new(width);
        for gate in gates {
            circuit.push(gate)?;
        }
        Ok(circuit)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.width)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn then(mut self, gate: Gate) -> Result<Self> {
        self.push(gate)?;
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Wraps the circuit as a single shareable gate.
    pub fn into_gate(self) -> Gate {
        Gate::Composite(Arc::new(SubCircuit::new(self)))
    }

    /// Reversed sequence of gate inverses.
    pub fn inverse(&self) -> Circuit {
        Circuit { width: self.width, gates: self.gates.iter().rev().map(Gate::inverse).collect() }
    }

    /// The whole circuit conditioned on `control`; the result is widened to
    /// include the control qubit if needed.
    pub fn controlled(&self, control: usize) -> Result<Circuit> {
        if control < self.width {
            return Err(Error::ControlOverlap { control });
        }
        let width = self.width.max(control + 1);
        let gate = Gate::controlled(control, self.clone().into_gate())?;
        Circuit::new(width).then(gate)
    }

    /// `k` repetitions sharing one compiled body; `power(0)` is the identity.
    pub fn power(&self, k: u32) -> Circuit {
        let body = self.clone().into_gate();
        Circuit { width: self.width, gates: (0..k).map(|_| body.clone()).collect() }
    }

    /// `self` followed by `other`.
    pub fn compose(&self, other: &Circuit) -> Result<Circuit> {
        if self.width != other.width {
            return Err(Error::WidthMismatch { expected: self.width, found: other.width });
        }
        let mut gates = self.gates.clone();
        gates.extend(other.gates.iter().cloned());
        Ok(Circuit { width: self.width, gates })
    }

    /// The same gates on a wider register.
    pub fn widened(&self, width: usize) -> Result<Circuit> {
        if width < self.width {
            return Err(Error::WidthMismatch { expected: self.width, found: width });
        }
        Ok(Circuit { width, gates: self.gates.clone() })
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let mut out = state.clone();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }

    pub fn apply_in_place(&self, state: &mut StateVector) -> Result<()> {
        if state.qubit_count() != self.width {
            return Err(Error::WidthMismatch { expected: self.width, found: state.qubit_count() });
        }
        let amps = state.amplitudes_mut();
        for gate in &self.gates {
            gate.apply(amps, 0);
        }
        Ok(())
    }

    /// `U|0…0⟩`.
    pub fn prepare(&self) -> Result<StateVector> {
        self.apply(&StateVector::zero(self.width)?)
    }
}

/// Unitary image of `state` under `circuit`.
pub fn apply_circuit(state: &StateVector, circuit: &Circuit) -> Result<StateVector> {
    circuit.apply(state)
}

pub fn circuit_transform(circuit: &Circuit, kind: Transform) -> Result<Circuit> {
    match kind {
        Transform::Inverse => Ok(circuit.inverse()),
        Transform::Controlled(control) => circuit.controlled(control),
        Transform::Power(k) => Ok(circuit.power(k)),
        Transform::Compose(other) => circuit.compose(&other),
    }
}

/// A circuit embedded as a gate, with its inverse and dense form cached.
pub struct SubCircuit {
    circuit: Circuit,
    inverse: OnceLock<Arc<SubCircuit>>,
    dense: OnceLock<Option<Vec<Complex64>>>,
}

impl SubCircuit {
    pub fn new(circuit: Circuit) -> Self {
        Self { circuit, inverse: OnceLock::new(), dense: OnceLock::new() }
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub(crate) fn inverse_shared(&self) -> Arc<SubCircuit> {
        self.inverse.get_or_init(|| Arc::new(SubCircuit::new(self.circuit.inverse()))).clone()
    }

    fn dense(&self) -> Option<&[Complex64]> {
        self.dense
            .get_or_init(|| {
                let width = self.circuit.width;
                if width > DENSE_MAX_QUBITS {
                    return None;
                }
                let dim = 1usize << width;
                let mut matrix = vec![Complex64::new(0.0, 0.0); dim * dim];
                let mut column = vec![Complex64::new(0.0, 0.0); dim];
                for c in 0..dim {
                    column.iter_mut().for_each(|a| *a = Complex64::new(0.0, 0.0));
                    column[c] = Complex64::new(1.0, 0.0);
                    for gate in &self.circuit.gates {
                        gate.apply(&mut column, 0);
                    }
                    for (r, value) in column.iter().enumerate() {
                        matrix[r * dim + c] = *value;
                    }
                }
                Some(matrix)
            })
            .as_deref()
    }

    pub(crate) fn apply(&self, amps: &mut [Complex64], ctrl: usize) {
        match self.dense() {
            Some(matrix) => {
                let dim = 1usize << self.circuit.width;
                let mut buf = vec![Complex64::new(0.0, 0.0); dim];
                for base in (0..amps.len()).step_by(dim) {
                    if base & ctrl != ctrl {
                        continue;
                    }
                    let block = &mut amps[base..base + dim];
                    for (r, out) in buf.iter_mut().enumerate() {
                        *out = matrix[r * dim..(r + 1) * dim].iter().zip(block.iter()).map(|(m, v)| m * v).sum();
                    }
                    block.copy_from_slice(&buf);
                }
            }
            None => {
                for gate in &self.circuit.gates {
                    gate.apply(amps, ctrl);
                }
            }
        }
    }
}

impl fmt::Debug for SubCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("SubCircuit").field(&self.circuit).finish()
    }
}

impl PartialEq for SubCircuit {
    fn eq(&self, other: &Self) -> bool {
        self.circuit == other.circuit
    }
}

impl Serialize for SubCircuit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.circuit.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SubCircuit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Circuit::deserialize(d).map(SubCircuit::new)
    }
}
