//! Exact statevector simulation: states, gates, circuits and measurement.

mod circuit;
mod gate;
mod measure;
mod prepare;
mod state;

pub use circuit::{apply_circuit, circuit_transform, Circuit, SubCircuit, Transform, DENSE_MAX_QUBITS};
pub use gate::{Gate, MarkedSet, QubitRange};
pub use measure::{branch_probabilities, marginal_distribution, measure, postselect, sample_index, MeasurementRecord};
pub use prepare::prepare_prior_circuit;
pub use state::{fidelity, StateVector, MAX_QUBITS, NORM_TOLERANCE};
