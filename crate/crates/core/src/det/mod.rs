//! Deterministic updating of a prior given as a preparation circuit `U`.
//!
//! The update is an amplitude-amplification rotation: the operator built from
//! `U` and the favored set turns the prior state by `ϑ` per application inside
//! the plane of its favored and disfavored parts, and the posterior lies in
//! that same plane at angle `ϑ′`.

mod fractional;
mod phase;
mod pipeline;
mod plan;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{HypothesisSet, PriorDistribution};
use crate::quantum::{Circuit, Gate, QubitRange, StateVector};

pub use fractional::{plane_step, solve_fractional_phases, FractionalPhases, FRACTIONAL_OVERLAP_TARGET};
pub use phase::{ancilla_count, estimate_theta, fidelity_bound, fold_outcome, AngleEstimate, PhaseEstimator};
pub use pipeline::{
    apply_deterministic_update, apply_deterministic_update_with_order, general_update, DeterministicUpdate,
    GeneralUpdate, StageKind, StageTrace, ThetaSource,
};
pub use plan::{extended_real, iteration_plan, target_angle, IterationPlan, PlanMode};

/// Below this favored weight the rotation angle counts as zero.
const DEGENERATE_WEIGHT: f64 = 1e-24;

/// Where the reflection sits relative to `U`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjugationOrder {
    /// `U Π U⁻¹ O_d`: reflects about `U|0⟩`, the prior state.
    #[default]
    PriorReflection,
    /// `U⁻¹ Π U O_d`: reflects about `U⁻¹|0⟩`. Kept for comparison only.
    AsPrinted,
}

/// Oracle phase `φ` on the favored set, then the reflection with phase `χ`
/// on everything orthogonal to the reference state.
#[derive(Clone, Debug, PartialEq)]
pub struct GroverOperator {
    circuit: Circuit,
    favored: HypothesisSet,
    marked_phase: f64,
    zero_phase: f64,
    order: ConjugationOrder,
}

impl GroverOperator {
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn favored(&self) -> &HypothesisSet {
        &self.favored
    }

    pub fn marked_phase(&self) -> f64 {
        self.marked_phase
    }

    pub fn zero_phase(&self) -> f64 {
        self.zero_phase
    }

    pub fn order(&self) -> ConjugationOrder {
        self.order
    }
}

pub fn build_grover_operator(
    prepare: &Circuit,
    favored: &HypothesisSet,
    marked_phase: f64,
    zero_phase: f64,
) -> Result<GroverOperator> {
    build_grover_operator_with_order(prepare, favored, marked_phase, zero_phase, ConjugationOrder::default())
}

pub fn build_grover_operator_with_order(
    prepare: &Circuit,
    favored: &HypothesisSet,
    marked_phase: f64,
    zero_phase: f64,
    order: ConjugationOrder,
) -> Result<GroverOperator> {
    let n = prepare.width();
    let prior = prepare.prepare()?;
    if favored_weight(&prior, favored)? <= DEGENERATE_WEIGHT {
        return Err(Error::DegenerateAngle);
    }
    let register = QubitRange::register(n);
    let forward = prepare.clone().into_gate();
    let backward = forward.inverse();
    let (first, second) = match order {
        ConjugationOrder::PriorReflection => (backward, forward),
        ConjugationOrder::AsPrinted => (forward, backward),
    };
    let circuit = Circuit::from_gates(
        n,
        vec![
            Gate::phase_oracle(register, favored.iter().copied(), marked_phase)?,
            first,
            Gate::zero_conditioned_phase(register, zero_phase),
            second,
        ],
    )?;
    Ok(GroverOperator { circuit, favored: favored.clone(), marked_phase, zero_phase, order })
}

/// Total weight `S` of the favored hypotheses in `state`.
pub fn favored_weight(state: &StateVector, favored: &HypothesisSet) -> Result<f64> {
    if let Some(&h) = favored.iter().find(|&&h| h >= state.dim()) {
        return Err(Error::InvalidParameter(format!("favored hypothesis {h} outside a space of {}", state.dim())));
    }
    Ok(favored.iter().map(|&h| state.amplitude(h).norm_sqr()).sum())
}

/// `ϑ = 2 asin(√S)` from the favored weight of a state.
pub fn theta_of_state(state: &StateVector, favored: &HypothesisSet) -> Result<f64> {
    theta_from_weight(favored_weight(state, favored)?)
}

/// `ϑ = 2 asin(√S)` from the prior mass of the favored set.
pub fn exact_theta(prior: &PriorDistribution, favored: &HypothesisSet) -> Result<f64> {
    if let Some(&h) = favored.iter().find(|&&h| h >= prior.space().size()) {
        return Err(Error::InvalidParameter(format!("favored hypothesis {h} outside the space")));
    }
    theta_from_weight(prior.mass(favored))
}

fn theta_from_weight(weight: f64) -> Result<f64> {
    if weight <= DEGENERATE_WEIGHT {
        return Err(Error::DegenerateAngle);
    }
    Ok(2.0 * weight.min(1.0).sqrt().asin())
}

/// Normalized favored part `|α⟩` and disfavored part `|β⟩` of `state`;
/// either is `None` when it carries no weight.
pub fn split_state(state: &StateVector, favored: &HypothesisSet) -> Result<(Option<StateVector>, Option<StateVector>)> {
    favored_weight(state, favored)?;
    let zero = num_complex::Complex64::new(0.0, 0.0);
    let part = |keep: bool| {
        let amps: Vec<_> = state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(h, a)| if favored.contains(&h) == keep { *a } else { zero })
            .collect();
        if amps.iter().all(|a| a.norm_sqr() == 0.0) {
            None
        } else {
            StateVector::from_unnormalized(amps).ok()
        }
    };
    Ok((part(true), part(false)))
}
