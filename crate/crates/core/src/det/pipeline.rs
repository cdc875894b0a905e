use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fractional::{solve_fractional_phases, FractionalPhases};
use super::phase::{AngleEstimate, PhaseEstimator};
use super::plan::{iteration_plan, IterationPlan, PlanMode};
use super::{build_grover_operator_with_order, exact_theta, theta_of_state, ConjugationOrder};
use crate::error::Result;
use crate::models::{decompose_likelihood, HypothesisSet, LikelihoodModel, PriorDistribution};
use crate::prob::posterior_state;
use crate::quantum::{fidelity, Circuit, StateVector};

/// Outcome of one deterministic update.
#[derive(Clone, Debug, PartialEq)]
pub struct DeterministicUpdate {
    pub state: StateVector,
    /// Overlap of `state` with the exact two-valued posterior of the prior
    /// prepared by `U`.
    pub achieved_fidelity: f64,
    /// What the plan promises under its own angle.
    pub predicted_fidelity: f64,
    /// `U` followed by every applied rotation; prepares `state` from `|0⟩`.
    pub preparation: Circuit,
    pub full_iterations: u64,
    pub fractional: Option<FractionalPhases>,
}

/// Posterior of the state prepared by `U` under weights 1 on `favored` and
/// `1/r` elsewhere.
fn two_valued_target(prior: &StateVector, favored: &HypothesisSet, suppression: f64) -> Result<StateVector> {
    let off = if suppression == f64::INFINITY { 0.0 } else { suppression.recip().sqrt() };
    let amps: Vec<Complex64> =
        prior.amplitudes().iter().enumerate().map(|(h, a)| if favored.contains(&h) { *a } else { a * off }).collect();
    StateVector::from_unnormalized(amps)
}

/// Applies the rotation `⌊T⌋` (or round-half-up `T`) times, then the
/// fractional step when the plan calls for one.
pub fn apply_deterministic_update(
    prepare: &Circuit,
    favored: &HypothesisSet,
    plan: &IterationPlan,
) -> Result<DeterministicUpdate> {
    apply_deterministic_update_with_order(prepare, favored, plan, ConjugationOrder::default())
}

pub fn apply_deterministic_update_with_order(
    prepare: &Circuit,
    favored: &HypothesisSet,
    plan: &IterationPlan,
    order: ConjugationOrder,
) -> Result<DeterministicUpdate> {
    let prior = prepare.prepare()?;
    let standard = build_grover_operator_with_order(prepare, favored, PI, PI, order)?;
    let full_iterations = plan.full_iterations();

    let mut preparation = Circuit::new(prepare.width());
    preparation.push(prepare.clone().into_gate())?;
    let step = standard.circuit().clone().into_gate();
    let mut state = prior.clone();
    for _ in 0..full_iterations {
        preparation.push(step.clone())?;
        standard.circuit().apply_in_place(&mut state)?;
    }

    let fractional = if plan.needs_fractional_step() {
        let reached = (2 * full_iterations + 1) as f64 * plan.theta;
        let phases = solve_fractional_phases(plan.theta, reached, plan.theta_prime)?;
        let partial =
            build_grover_operator_with_order(prepare, favored, phases.marked_phase, phases.zero_phase, order)?;
        partial.circuit().apply_in_place(&mut state)?;
        preparation.push(partial.circuit().clone().into_gate())?;
        Some(phases)
    } else {
        None
    };

    let target = two_valued_target(&prior, favored, plan.suppression)?;
    Ok(DeterministicUpdate {
        achieved_fidelity: fidelity(&state, &target)?,
        predicted_fidelity: plan.predicted_fidelity(),
        state,
        preparation,
        full_iterations,
        fractional,
    })
}

/// Where each stage gets its rotation angle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaSource {
    /// From the classical intermediate distribution.
    #[default]
    ExactClassical,
    /// From one phase-estimation run on the current preparation circuit.
    PhaseEstimation { bits: u32, epsilon: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StageKind {
    Elimination,
    TwoValued { bit_weight: i32 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTrace {
    pub stage: usize,
    pub kind: StageKind,
    pub favored: HypothesisSet,
    /// Angle of the current intermediate state.
    pub true_theta: f64,
    pub estimate: Option<AngleEstimate>,
    pub plan: IterationPlan,
    pub full_iterations: u64,
    pub fractional: Option<FractionalPhases>,
    pub predicted_fidelity: f64,
    pub achieved_fidelity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralUpdate {
    pub state: StateVector,
    pub preparation: Circuit,
    pub stages: Vec<StageTrace>,
    /// Overlap with the exact Bayes posterior of the full likelihood.
    pub final_fidelity: f64,
    /// Total variation between the final hypothesis distribution and the
    /// exact posterior.
    pub total_variation: f64,
}

/// Factors `table` into an optional elimination followed by two-valued
/// stages, and runs one deterministic update per stage, each on the
/// preparation circuit left by the previous one.
pub fn general_update<R: Rng + ?Sized>(
    prepare: &Circuit,
    table: &[f64],
    fraction_bits: u32,
    source: ThetaSource,
    mode: PlanMode,
    rng: &mut R,
) -> Result<GeneralUpdate> {
    let initial = prepare.prepare()?;
    let prior = PriorDistribution::from_state(&initial)?;
    let likelihood = LikelihoodModel::table(table.to_vec())?;
    likelihood.check_space(prior.space())?;
    let decomposition = decompose_likelihood(table, &prior.support(), fraction_bits)?;

    let mut schedule: Vec<(StageKind, HypothesisSet, f64)> = Vec::new();
    if let Some(consistent) = &decomposition.elimination {
        schedule.push((StageKind::Elimination, consistent.clone(), f64::INFINITY));
    }
    for stage in &decomposition.stages {
        schedule.push((
            StageKind::TwoValued { bit_weight: stage.bit_weight },
            stage.favored.clone(),
            stage.suppression,
        ));
    }

    let mut current = prepare.clone();
    let mut state = initial.clone();
    let mut intermediate = prior.probs().to_vec();
    let mut stages = Vec::with_capacity(schedule.len());
    for (index, (kind, favored, suppression)) in schedule.into_iter().enumerate() {
        let classical = PriorDistribution::from_weights(&intermediate)?;
        let true_theta = theta_of_state(&state, &favored)?;
        let (theta, estimate) = match source {
            ThetaSource::ExactClassical => (exact_theta(&classical, &favored)?, None),
            ThetaSource::PhaseEstimation { bits, epsilon } => {
                let estimate = PhaseEstimator::new(&current, &favored, bits, epsilon)?.sample(rng);
                (estimate.theta, Some(estimate))
            }
        };
        let plan = iteration_plan(theta, suppression)?.with_mode(mode);
        let update = apply_deterministic_update(&current, &favored, &plan)?;
        stages.push(StageTrace {
            stage: index + 1,
            kind,
            favored: favored.clone(),
            true_theta,
            estimate,
            full_iterations: update.full_iterations,
            fractional: update.fractional,
            predicted_fidelity: update.predicted_fidelity,
            achieved_fidelity: update.achieved_fidelity,
            plan,
        });
        for (h, p) in intermediate.iter_mut().enumerate() {
            if !favored.contains(&h) {
                *p = if suppression == f64::INFINITY { 0.0 } else { *p / suppression };
            }
        }
        current = update.preparation;
        state = update.state;
    }

    let oracle = posterior_state(&initial, &likelihood)?;
    let exact = crate::models::bayes_posterior(&prior, &likelihood)?.posterior;
    let reached = PriorDistribution::from_state(&state)?;
    Ok(GeneralUpdate {
        final_fidelity: fidelity(&state, &oracle)?,
        total_variation: reached.total_variation(&exact),
        state,
        preparation: current,
        stages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::HypothesisSpace;
    use crate::quantum::prepare_prior_circuit;
    use crate::rng::substream;

    fn set(items: &[usize]) -> HypothesisSet {
        items.iter().copied().collect()
    }

    fn uniform(n: usize) -> Circuit {
        prepare_prior_circuit(&PriorDistribution::uniform(HypothesisSpace::new(n).unwrap())).unwrap()
    }

    #[test]
    fn single_marked_item_in_one_step() {
        let plan = iteration_plan(PI / 3.0, f64::INFINITY).unwrap();
        let out = apply_deterministic_update(&uniform(2), &set(&[3]), &plan).unwrap();
        assert_eq!(out.full_iterations, 1);
        assert!(out.fractional.is_none());
        assert!((out.state.amplitude(3).norm() - 1.0).abs() < 1e-12);
        assert!(out.achieved_fidelity > 1.0 - 1e-12);
        let again = out.preparation.prepare().unwrap();
        assert!(fidelity(&again, &out.state).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn two_valued_half_space() {
        let favored = set(&[0, 1]);
        let plan = iteration_plan(PI / 2.0, 3.0).unwrap();
        let exact = apply_deterministic_update(&uniform(2), &favored, &plan).unwrap();
        assert!(exact.achieved_fidelity >= 1.0 - 1e-9);
        let probs = exact.state.probabilities();
        for (p, e) in probs.iter().zip([0.375, 0.375, 0.125, 0.125]) {
            assert!((p - e).abs() < 1e-8);
        }
        let rounded =
            apply_deterministic_update(&uniform(2), &favored, &plan.with_mode(PlanMode::ClosestInteger)).unwrap();
        let expected = (PI / 12.0).cos();
        assert!((rounded.achieved_fidelity - expected).abs() < 1e-9);
        assert!((rounded.predicted_fidelity - expected).abs() < 1e-9);
    }

    #[test]
    fn dyadic_table_in_two_stages() {
        let mut rng = substream(0, 0, 0);
        let out = general_update(
            &uniform(2),
            &[0.5, 0.25, 0.125, 0.125],
            8,
            ThetaSource::ExactClassical,
            PlanMode::FractionalFinal,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.stages.len(), 2);
        assert!(out.final_fidelity >= 1.0 - 1e-9);
        for (a, e) in out.state.amplitudes().iter().zip([0.5f64, 0.25, 0.125, 0.125]) {
            assert!((a.norm() - e.sqrt()).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_table_changes_nothing() {
        let mut rng = substream(0, 0, 0);
        let out =
            general_update(&uniform(2), &[0.3; 4], 8, ThetaSource::ExactClassical, PlanMode::FractionalFinal, &mut rng)
                .unwrap();
        assert!(out.stages.is_empty());
        assert!(fidelity(&out.state, &uniform(2).prepare().unwrap()).unwrap() > 1.0 - 1e-15);
    }

    #[test]
    fn zeros_lead_with_elimination() {
        let mut rng = substream(0, 0, 0);
        let out = general_update(
            &uniform(2),
            &[0.4, 0.0, 0.2, 0.2],
            8,
            ThetaSource::ExactClassical,
            PlanMode::FractionalFinal,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.stages[0].kind, StageKind::Elimination);
        assert!(out.final_fidelity >= 1.0 - 1e-9);
        assert!(out.state.amplitude(1).norm() < 1e-6);
    }

    #[test]
    fn estimated_angles_still_land_close() {
        let mut rng = substream(9, 0, 0);
        let out = general_update(
            &uniform(2),
            &[0.5, 0.25, 0.125, 0.125],
            8,
            ThetaSource::PhaseEstimation { bits: 5, epsilon: 0.05 },
            PlanMode::FractionalFinal,
            &mut rng,
        )
        .unwrap();
        assert!(out.stages.iter().all(|s| s.estimate.is_some()));
        assert!(out.final_fidelity > 0.9);
    }
}
