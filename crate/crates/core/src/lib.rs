//! Bayesian updating of probability distributions amplitude-encoded on a
//! qubit register, simulated exactly.
//!
//! * [`quantum`]: statevector, gates, circuit algebra, QFT, measurement.
//! * [`models`]: priors, likelihoods, the classical Bayes oracle and the
//!   binary-expansion decomposition into two-valued stages.
//! * [`prob`]: single-copy probabilistic updating with an ancilla rotation,
//!   single-shot and iterative.
//! * [`det`]: deterministic updating from a preparation circuit by amplitude
//!   amplification, with phase estimation of the rotation angle.

pub mod det;
pub mod error;
pub mod models;
pub mod prob;
pub mod quantum;
pub mod rng;

pub use error::{Error, Result};
