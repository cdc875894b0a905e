use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the simulator, the classical model layer and both updaters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("width mismatch: expected {expected} qubits, found {found}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("qubit {qubit} out of range for a {width}-qubit register")]
    QubitOutOfRange { qubit: usize, width: usize },

    #[error("control qubit {control} overlaps the target range of the controlled gate")]
    ControlOverlap { control: usize },

    #[error("qubit {0} listed more than once")]
    DuplicateQubit(usize),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid likelihood: {0}")]
    InvalidLikelihood(String),

    #[error("zero evidence: P(d) = 0, the update is undefined")]
    ZeroEvidence,

    #[error("likelihood is zero at supported hypothesis h = {h}")]
    ZeroLikelihood { h: usize },

    #[error("rotation amplitude {amplitude} exceeds 1 at hypothesis h = {h}")]
    InvalidRotation { h: usize, amplitude: f64 },

    #[error("invalid bound schedule: {0}")]
    InvalidSchedule(String),

    #[error("degenerate rotation angle: no prior weight on the favored set")]
    DegenerateAngle,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical contract violated: {0}")]
    NumericalContract(String),
}
