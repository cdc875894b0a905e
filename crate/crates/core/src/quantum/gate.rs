//! Gate descriptors and their statevector kernels.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::circuit::SubCircuit;
use crate::error::{Error, Result};

/// Contiguous block of qubits `start..start + len`, read as an integer with
/// qubit `start` as its least significant bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitRange {
    pub start: usize,
    pub len: usize,
}

impl QubitRange {
    pub const fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    /// The first `len` qubits.
    pub const fn register(len: usize) -> Self {
        Self { start: 0, len }
    }

    pub const fn end(&self) -> usize {
        self.start + self.len
    }

    pub const fn size(&self) -> usize {
        1 << self.len
    }

    pub const fn mask(&self) -> usize {
        ((1usize << self.len) - 1) << self.start
    }

    /// Integer value the range holds in basis index `index`.
    #[inline]
    pub const fn value_of(&self, index: usize) -> usize {
        (index >> self.start) & ((1usize << self.len) - 1)
    }
}

/// Membership table over the `2^len` values of a register.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedSet {
    flags: Vec<bool>,
}

impl MarkedSet {
    pub fn from_indices(size: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut flags = vec![false; size];
        for h in indices {
            if h >= size {
                return Err(Error::InvalidParameter(format!("marked index {h} outside register of size {size}")));
            }
            flags[h] = true;
        }
        Ok(Self { flags })
    }

    pub fn size(&self) -> usize {
        self.flags.len()
    }

    #[inline]
    pub fn contains(&self, h: usize) -> bool {
        self.flags[h]
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags.iter().enumerate().filter(|(_, &f)| f).map(|(h, _)| h)
    }
}

#[derive(Serialize, Deserialize)]
struct MarkedSetRepr {
    size: usize,
    indices: Vec<usize>,
}

impl Serialize for MarkedSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MarkedSetRepr { size: self.size(), indices: self.indices().collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MarkedSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MarkedSetRepr::deserialize(d)?;
        MarkedSet::from_indices(repr.size, repr.indices).map_err(serde::de::Error::custom)
    }
}

/// One unitary building block.
///
/// `PhaseOracle` with `phase = π` flips the sign of marked hypotheses;
/// `ZeroConditionedPhase` with `phase = π` is the reflection that fixes `|0⟩`
/// and negates every other basis state of its register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Gate {
    Hadamard {
        target: usize,
    },
    PauliX {
        target: usize,
    },
    /// `R_y(angles[v])` on `target`, where `v` is the value held by `controls`.
    /// On `|0⟩` it produces `cos(θ/2)|0⟩ + sin(θ/2)|1⟩`.
    ConditionalRotation {
        controls: QubitRange,
        target: usize,
        angles: Vec<f64>,
    },
    PhaseOracle {
        register: QubitRange,
        marked: MarkedSet,
        phase: f64,
    },
    ZeroConditionedPhase {
        register: QubitRange,
        phase: f64,
    },
    /// `|j⟩ ↦ 2^{-t/2} Σ_k e^{2πi jk/2^t} |k⟩` on the range.
    Qft {
        range: QubitRange,
    },
    InverseQft {
        range: QubitRange,
    },
    Controlled {
        control: usize,
        gate: Box<Gate>,
    },
    /// A whole circuit acting on qubits `0..circuit.width()`.
    Composite(Arc<SubCircuit>),
}

impl Gate {
    pub fn hadamard(target: usize) -> Self {
        Gate::Hadamard { target }
    }

    pub fn pauli_x(target: usize) -> Self {
        Gate::PauliX { target }
    }

    pub fn phase_oracle(register: QubitRange, marked: impl IntoIterator<Item = usize>, phase: f64) -> Result<Self> {
        let marked = MarkedSet::from_indices(register.size(), marked)?;
        Ok(Gate::PhaseOracle { register, marked, phase })
    }

    pub fn zero_conditioned_phase(register: QubitRange, phase: f64) -> Self {
        Gate::ZeroConditionedPhase { register, phase }
    }

    pub fn controlled(control: usize, gate: Gate) -> Result<Self> {
        if gate.qubit_mask() & (1usize << control) != 0 {
            return Err(Error::ControlOverlap { control });
        }
        Ok(Gate::Controlled { control, gate: Box::new(gate) })
    }

    /// Bit mask of every qubit the gate reads or writes.
    pub fn qubit_mask(&self) -> usize {
        match self {
            Gate::Hadamard { target } | Gate::PauliX { target } => 1 << target,
            Gate::ConditionalRotation { controls, target, .. } => controls.mask() | (1 << target),
            Gate::PhaseOracle { register, .. } | Gate::ZeroConditionedPhase { register, .. } => register.mask(),
            Gate::Qft { range } | Gate::InverseQft { range } => range.mask(),
            Gate::Controlled { control, gate } => (1 << control) | gate.qubit_mask(),
            Gate::Composite(sub) => (1 << sub.circuit().width()) - 1,
        }
    }

    /// Number of qubits a register must have to host this gate.
    pub fn required_width(&self) -> usize {
        usize::BITS as usize - self.qubit_mask().leading_zeros() as usize
    }

    /// Structural checks against a register of `width` qubits.
    pub fn validate(&self, width: usize) -> Result<()> {
        let too_wide = |q: usize| Error::QubitOutOfRange { qubit: q, width };
        if self.required_width() > width {
            return Err(too_wide(self.required_width() - 1));
        }
        match self {
            Gate::Hadamard { .. } | Gate::PauliX { .. } | Gate::Composite(_) => Ok(()),
            Gate::ConditionalRotation { controls, target, angles } => {
                if controls.mask() & (1 << target) != 0 {
                    return Err(Error::ControlOverlap { control: *target });
                }
                if angles.len() != controls.size() {
                    return Err(Error::InvalidParameter(format!(
                        "rotation table has {} angles for {} control values",
                        angles.len(),
                        controls.size()
                    )));
                }
                if angles.iter().any(|a| !a.is_finite()) {
                    return Err(Error::InvalidParameter("non-finite rotation angle".into()));
                }
                Ok(())
            }
            Gate::PhaseOracle { register, marked, phase } => {
                if marked.size() != register.size() {
                    return Err(Error::InvalidParameter(format!(
                        "marked table of size {} on a register of size {}",
                        marked.size(),
                        register.size()
                    )));
                }
                finite_phase(*phase)
            }
            Gate::ZeroConditionedPhase { phase, .. } => finite_phase(*phase),
            Gate::Qft { range } | Gate::InverseQft { range } => {
                if range.len == 0 {
                    return Err(Error::InvalidParameter("empty Fourier range".into()));
                }
                Ok(())
            }
            Gate::Controlled { control, gate } => {
                if gate.qubit_mask() & (1 << control) != 0 {
                    return Err(Error::ControlOverlap { control: *control });
                }
                gate.validate(width)
            }
        }
    }

    /// The analytic inverse; every variant stays inside the gate set.
    pub fn inverse(&self) -> Gate {
        match self {
            Gate::Hadamard { .. } | Gate::PauliX { .. } => self.clone(),
            Gate::ConditionalRotation { controls, target, angles } => Gate::ConditionalRotation {
                controls: *controls,
                target: *target,
                angles: angles.iter().map(|a| -a).collect(),
            },
            Gate::PhaseOracle { register, marked, phase } => {
                Gate::PhaseOracle { register: *register, marked: marked.clone(), phase: -phase }
            }
            Gate::ZeroConditionedPhase { register, phase } => {
                Gate::ZeroConditionedPhase { register: *register, phase: -phase }
            }
            Gate::Qft { range } => Gate::InverseQft { range: *range },
            Gate::InverseQft { range } => Gate::Qft { range: *range },
            Gate::Controlled { control, gate } => {
                Gate::Controlled { control: *control, gate: Box::new(gate.inverse()) }
            }
            Gate::Composite(sub) => Gate::Composite(sub.inverse_shared()),
        }
    }

    /// Applies the gate on every basis index whose bits cover `ctrl`.
    pub(crate) fn apply(&self, amps: &mut [Complex64], ctrl: usize) {
        match self {
            Gate::Hadamard { target } => {
                for_pairs(amps.len(), *target, ctrl, |i, j| {
                    let (a, b) = (amps[i], amps[j]);
                    amps[i] = (a + b) * FRAC_1_SQRT_2;
                    amps[j] = (a - b) * FRAC_1_SQRT_2;
                });
            }
            Gate::PauliX { target } => {
                for_pairs(amps.len(), *target, ctrl, |i, j| amps.swap(i, j));
            }
            Gate::ConditionalRotation { controls, target, angles } => {
                let trig: Vec<(f64, f64)> = angles.iter().map(|a| half_angle(*a)).collect();
                for_pairs(amps.len(), *target, ctrl, |i, j| {
                    let (c, s) = trig[controls.value_of(i)];
                    let (a, b) = (amps[i], amps[j]);
                    amps[i] = a * c - b * s;
                    amps[j] = a * s + b * c;
                });
            }
            Gate::PhaseOracle { register, marked, phase } => {
                let factor = phase_factor(*phase);
                for (i, amp) in amps.iter_mut().enumerate() {
                    if i & ctrl == ctrl && marked.contains(register.value_of(i)) {
                        *amp *= factor;
                    }
                }
            }
            Gate::ZeroConditionedPhase { register, phase } => {
                let factor = phase_factor(*phase);
                for (i, amp) in amps.iter_mut().enumerate() {
                    if i & ctrl == ctrl && register.value_of(i) != 0 {
                        *amp *= factor;
                    }
                }
            }
            Gate::Qft { range } => fourier(amps, *range, ctrl, false),
            Gate::InverseQft { range } => fourier(amps, *range, ctrl, true),
            Gate::Controlled { control, gate } => gate.apply(amps, ctrl | (1 << control)),
            Gate::Composite(sub) => sub.apply(amps, ctrl),
        }
    }
}

fn finite_phase(phase: f64) -> Result<()> {
    if phase.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter("non-finite phase".into()))
    }
}

/// `(cos θ/2, sin θ/2)` with exact values at the table's common angles.
fn half_angle(theta: f64) -> (f64, f64) {
    if theta == 0.0 {
        (1.0, 0.0)
    } else if theta == PI {
        (0.0, 1.0)
    } else if theta == -PI {
        (0.0, -1.0)
    } else {
        let (s, c) = (theta / 2.0).sin_cos();
        (c, s)
    }
}

/// `e^{iφ}` with exact values at `0` and `±π`.
pub(crate) fn phase_factor(phi: f64) -> Complex64 {
    if phi == 0.0 {
        Complex64::new(1.0, 0.0)
    } else if phi == PI || phi == -PI {
        Complex64::new(-1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, phi)
    }
}

/// Visits index pairs `(i, i | 2^target)` with bit `target` clear in `i`.
#[inline]
fn for_pairs(dim: usize, target: usize, ctrl: usize, mut f: impl FnMut(usize, usize)) {
    let bit = 1usize << target;
    for base in (0..dim).step_by(bit << 1) {
        for i in base..base + bit {
            if i & ctrl == ctrl {
                f(i, i | bit);
            }
        }
    }
}

fn fourier(amps: &mut [Complex64], range: QubitRange, ctrl: usize, inverse: bool) {
    let n = range.size();
    let mut planner = FftPlanner::<f64>::new();
    // The QFT carries the positive exponent, which rustfft calls "inverse".
    let plan = if inverse { planner.plan_fft_forward(n) } else { planner.plan_fft_inverse(n) };
    let scale = 1.0 / (n as f64).sqrt();
    let mask = range.mask();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
    for rest in 0..amps.len() {
        if rest & mask != 0 || rest & ctrl != ctrl {
            continue;
        }
        for (k, slot) in buf.iter_mut().enumerate() {
            *slot = amps[rest | (k << range.start)];
        }
        plan.process_with_scratch(&mut buf, &mut scratch);
        for (k, value) in buf.iter().enumerate() {
            amps[rest | (k << range.start)] = value * scale;
        }
    }
}
