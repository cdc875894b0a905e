//! Probabilistic updating of a single copy of the prior state.
//!
//! An ancilla is rotated conditionally on `h` so that its `|0⟩` component
//! carries amplitude `A(h) = c·√P(d|h)`; reading the ancilla as `0` leaves the
//! register in the posterior state. On failure the residual state is known
//! exactly, and a later stage with a tighter bound on `max P(d|h)` can rotate
//! it again without losing overall success probability.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{max_likelihood_over_support, LikelihoodModel, PriorDistribution};
use crate::quantum::{branch_probabilities, fidelity, measure, postselect, Circuit, Gate, QubitRange, StateVector};

/// Absolute tolerance for every exact probability and amplitude check here.
pub const EXACT_TOLERANCE: f64 = 1e-12;

/// Ancilla outcome that signals a successful update.
pub const SUCCESS_OUTCOME: usize = 0;

/// How the rotation constant `c²` of a single shot is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CSquaredMode {
    /// `c² = 1`, always safe.
    Trivial,
    /// `c² = 1/M` for a known bound `M ≥ max P(d|h)`.
    Bound(f64),
    /// `c² = 1/max_{support} P(d|h)`, which attains the optimal success rate.
    ExactMax,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub mode: CSquaredMode,
}

impl ShotConfig {
    pub fn new(mode: CSquaredMode) -> Self {
        Self { mode }
    }

    /// The `c²` this configuration uses for `(prior, likelihood)`.
    pub fn resolve(&self, prior: &PriorDistribution, likelihood: &LikelihoodModel) -> Result<f64> {
        let max = max_likelihood_over_support(prior, likelihood)?;
        let c_squared = match self.mode {
            CSquaredMode::Trivial => 1.0,
            CSquaredMode::Bound(m) => {
                if !(m.is_finite() && m > 0.0 && m <= 1.0) {
                    return Err(Error::InvalidParameter(format!("bound M = {m} outside (0, 1]")));
                }
                1.0 / m
            }
            CSquaredMode::ExactMax => {
                if max <= 0.0 {
                    return Err(Error::ZeroEvidence);
                }
                1.0 / max
            }
        };
        if c_squared * max > 1.0 + EXACT_TOLERANCE {
            let h = argmax_on_support(prior, likelihood);
            return Err(Error::InvalidRotation { h, amplitude: (c_squared * max).sqrt() });
        }
        Ok(c_squared)
    }
}

fn argmax_on_support(prior: &PriorDistribution, likelihood: &LikelihoodModel) -> usize {
    prior
        .support()
        .into_iter()
        .fold((0, f64::NEG_INFINITY), |best, h| {
            let v = likelihood.value(h);
            if v > best.1 {
                (h, v)
            } else {
                best
            }
        })
        .0
}

/// Strictly decreasing bounds `M₁ > M₂ > …` on `max P(d|h)`, each in `(0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSchedule {
    bounds: Vec<f64>,
}

impl BoundSchedule {
    pub fn new(bounds: Vec<f64>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidSchedule("schedule is empty".into()));
        }
        if let Some(m) = bounds.iter().find(|m| !(m.is_finite() && **m > 0.0 && **m <= 1.0)) {
            return Err(Error::InvalidSchedule(format!("bound {m} outside (0, 1]")));
        }
        if bounds.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidSchedule("bounds must strictly decrease".into()));
        }
        Ok(Self { bounds })
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    /// `c_k² = 1/M_k − 1/M_{k−1}` with `1/M₀ = 0`.
    pub fn c_squares(&self) -> Vec<f64> {
        let mut previous = 0.0;
        self.bounds
            .iter()
            .map(|m| {
                let inv = 1.0 / m;
                let c = inv - previous;
                previous = inv;
                c
            })
            .collect()
    }
}

/// Result of a (single-shot or iterative) probabilistic update.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateOutcome {
    pub success: bool,
    /// Register state after the run: the posterior on success, the last
    /// residual state otherwise.
    pub state: StateVector,
    /// Exact success probability of every reachable stage, given failure of
    /// all earlier ones.
    pub exact_stage_probabilities: Vec<f64>,
    /// `P(d) Σ c_s²` over the whole configuration.
    pub cumulative_success: f64,
    pub stages_run: usize,
    pub success_stage: Option<usize>,
}

/// Exact per-stage accounting of an iterative run, following the failure
/// branch through every stage without sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub c_squared: f64,
    /// Ancilla `|0⟩` weight read off the simulated state.
    pub probability: f64,
    /// `P(d)c_k² / (1 − P(d) Σ_{s<k} c_s²)`.
    pub closed_form: f64,
    /// `c_k²P(d) / (⟨B_{k−2}²⟩ − c_{k−1}²P(d))`.
    pub recurrence_form: f64,
    /// Fidelity of the success branch with the exact posterior state.
    pub success_fidelity: f64,
    /// Largest amplitude gap between the simulated failure branch and
    /// `N_k Σ √P(h) B_k(h) |h⟩`; `None` when failure is impossible.
    pub residual_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterativeTrace {
    pub evidence: f64,
    pub bound: f64,
    pub stages: Vec<StageRecord>,
    pub cumulative_success: f64,
}

/// `P(d) / max_{support} P(d|h)`: no single-copy procedure succeeds more often.
pub fn success_probability_bound(prior: &PriorDistribution, likelihood: &LikelihoodModel) -> Result<f64> {
    let evidence = crate::models::evidence(prior, likelihood)?;
    if evidence <= 0.0 {
        return Err(Error::ZeroEvidence);
    }
    Ok(evidence / max_likelihood_over_support(prior, likelihood)?)
}

/// Posterior state obtained by reweighting the amplitudes of `prior_state`
/// by `√P(d|h)`. For a real nonnegative prior state this is `Σ √P(h|d) |h⟩`.
pub fn posterior_state(prior_state: &StateVector, likelihood: &LikelihoodModel) -> Result<StateVector> {
    let prior = PriorDistribution::from_state(prior_state)?;
    likelihood.check_space(prior.space())?;
    let amps: Vec<_> =
        prior_state.amplitudes().iter().enumerate().map(|(h, a)| a * likelihood.value(h).sqrt()).collect();
    if amps.iter().all(|a| a.norm_sqr() == 0.0) {
        return Err(Error::ZeroEvidence);
    }
    StateVector::from_unnormalized(amps)
}

/// Conditional ancilla rotation on `register ⊗ ancilla` (ancilla = qubit `n`).
///
/// For the first stage (`previous = None`) the ancilla enters in `|0⟩`. For a
/// later stage it enters in `|1⟩`, the failure outcome, and is flipped first;
/// `previous` is then `Σ_{s<k} c_s²`. Either way the outgoing `|0⟩` amplitude
/// at `h` is `A_k(h) = c·√P(d|h) / B_{k−1}(h)` with
/// `B_k² = 1 − P(d|h) Σ_{s≤k} c_s²`.
pub fn build_update_rotation(
    prior: &PriorDistribution,
    likelihood: &LikelihoodModel,
    c_squared: f64,
    previous: Option<f64>,
) -> Result<Circuit> {
    let space = prior.space();
    likelihood.check_space(space)?;
    if !(c_squared.is_finite() && c_squared >= 0.0) {
        return Err(Error::InvalidParameter(format!("c² = {c_squared} must be nonnegative")));
    }
    let before = previous.unwrap_or(0.0);
    if !(before.is_finite() && before >= 0.0) {
        return Err(Error::InvalidParameter(format!("cumulative c² = {before} must be nonnegative")));
    }
    let n = space.qubits();
    let mut angles = Vec::with_capacity(space.size());
    for h in 0..space.size() {
        let l = likelihood.value(h);
        let kept = c_squared * l;
        // Both residuals come from the cumulative sum, so they round alike.
        let remaining = 1.0 - l * (before + c_squared);
        let angle = if remaining < -EXACT_TOLERANCE {
            if prior.in_support(h) {
                let entering = 1.0 - l * before;
                let amplitude = if entering <= 0.0 { f64::INFINITY } else { (kept / entering).sqrt() };
                return Err(Error::InvalidRotation { h, amplitude });
            }
            // Unweighted hypothesis: any angle will do.
            0.0
        } else {
            2.0 * remaining.max(0.0).sqrt().atan2(kept.sqrt())
        };
        angles.push(angle);
    }
    let mut circuit = Circuit::new(n + 1);
    if previous.is_some() {
        circuit.push(Gate::pauli_x(n))?;
    }
    circuit.push(Gate::ConditionalRotation { controls: QubitRange::register(n), target: n, angles })?;
    Ok(circuit)
}

/// Classical bookkeeping shared by the single-shot and iterative runs.
struct Plan {
    prior: PriorDistribution,
    likelihood: Vec<f64>,
    evidence: f64,
    c_squares: Vec<f64>,
}

impl Plan {
    fn new(prior_state: &StateVector, likelihood: &LikelihoodModel, c_squares: Vec<f64>) -> Result<Self> {
        let prior = PriorDistribution::from_state(prior_state)?;
        let table = likelihood.to_table(prior.space())?;
        let evidence = crate::models::evidence(&prior, likelihood)?;
        if evidence <= 0.0 {
            return Err(Error::ZeroEvidence);
        }
        let plan = Self { prior, likelihood: table, evidence, c_squares };
        plan.check_rotations()?;
        Ok(plan)
    }

    /// Every stage must keep `B_k² ≥ 0` on the support.
    fn check_rotations(&self) -> Result<()> {
        let mut cumulative = 0.0;
        for c in &self.c_squares {
            cumulative += c;
            for h in self.prior.support() {
                let l = self.likelihood[h];
                if cumulative * l > 1.0 + EXACT_TOLERANCE {
                    let before = 1.0 - (cumulative - c) * l;
                    let amplitude = if before <= 0.0 { f64::INFINITY } else { (c * l / before).sqrt() };
                    return Err(Error::InvalidRotation { h, amplitude });
                }
            }
        }
        Ok(())
    }

    /// `B_k²(h)` by the recurrence `B_k² = B_{k−1}² − c_k² P(d|h)`, `B₀² = 1`.
    fn residual_profile(&self, k: usize) -> Vec<f64> {
        let mut b2 = vec![1.0; self.likelihood.len()];
        for c in &self.c_squares[..k] {
            for (b, l) in b2.iter_mut().zip(&self.likelihood) {
                *b -= c * l;
            }
        }
        b2
    }

    fn mean_residual(&self, k: usize) -> f64 {
        self.residual_profile(k).iter().zip(self.prior.probs()).map(|(b, p)| b * p).sum()
    }

    fn cumulative_c_squared(&self, k: usize) -> f64 {
        self.c_squares[..k].iter().sum()
    }

    /// Closed form for stage `k` (1-based).
    fn closed_form(&self, k: usize) -> f64 {
        self.evidence * self.c_squares[k - 1] / (1.0 - self.evidence * self.cumulative_c_squared(k - 1))
    }

    fn recurrence_form(&self, k: usize) -> f64 {
        // ⟨B_{-1}²⟩ = ⟨B_0²⟩ = 1 and c_0² = 0.
        let mean = if k >= 2 { self.mean_residual(k - 2) } else { 1.0 };
        let previous = if k >= 2 { self.c_squares[k - 2] } else { 0.0 };
        self.c_squares[k - 1] * self.evidence / (mean - previous * self.evidence)
    }

    fn failure_probability(&self, k: usize) -> f64 {
        1.0 - self.evidence * self.cumulative_c_squared(k)
    }

    fn reachable(&self, k: usize) -> bool {
        self.failure_probability(k - 1) > EXACT_TOLERANCE
    }

    fn exact_probabilities(&self) -> Vec<f64> {
        (1..=self.c_squares.len()).take_while(|&k| self.reachable(k)).map(|k| self.closed_form(k)).collect()
    }

    fn cumulative_success(&self) -> f64 {
        self.evidence * self.cumulative_c_squared(self.c_squares.len())
    }

    fn stage_circuit(&self, k: usize) -> Result<Circuit> {
        build_update_rotation(
            &self.prior,
            &LikelihoodModel::Table(self.likelihood.clone()),
            self.c_squares[k - 1],
            (k > 1).then(|| self.cumulative_c_squared(k - 1)),
        )
    }

    /// `N_k Σ ψ(h) B_k(h) |h⟩` with `B_k² = 1 − P(d|h) Σ_{s≤k} c_s²`.
    fn expected_residual(&self, prior_state: &StateVector, k: usize) -> Result<StateVector> {
        let total = self.cumulative_c_squared(k);
        let amps = prior_state
            .amplitudes()
            .iter()
            .zip(&self.likelihood)
            .map(|(a, l)| a * (1.0 - l * total).max(0.0).sqrt())
            .collect();
        StateVector::from_unnormalized(amps)
    }

    /// Runs stage `k` on `input` and checks its branch law. Returns the
    /// post-rotation state and the exact success probability.
    fn run_stage(&self, k: usize, input: &StateVector) -> Result<(StateVector, f64)> {
        let n = self.prior.space().qubits();
        let rotated = self.stage_circuit(k)?.apply(input)?;
        let (p_success, _) = branch_probabilities(&rotated, n)?;
        let closed = self.closed_form(k);
        let recurrence = self.recurrence_form(k);
        if (p_success - closed).abs() > EXACT_TOLERANCE || (closed - recurrence).abs() > EXACT_TOLERANCE {
            return Err(Error::NumericalContract(format!(
                "stage {k}: simulated p = {p_success}, closed form {closed}, recurrence {recurrence}"
            )));
        }
        Ok((rotated, p_success))
    }

    fn check_residual(&self, prior_state: &StateVector, k: usize, residual: &StateVector) -> Result<f64> {
        let gap = residual.max_abs_diff(&self.expected_residual(prior_state, k)?)?;
        if gap > EXACT_TOLERANCE {
            return Err(Error::NumericalContract(format!("stage {k}: residual state off by {gap}")));
        }
        Ok(gap)
    }
}

fn run_iterative<R: Rng + ?Sized>(prior_state: &StateVector, plan: &Plan, rng: &mut R) -> Result<UpdateOutcome> {
    let n = prior_state.qubit_count();
    let exact = plan.exact_probabilities();
    let mut current = prior_state.with_ancillas(1)?;
    let mut stages_run = 0;
    for k in 1..=plan.c_squares.len() {
        if !plan.reachable(k) {
            break;
        }
        let (rotated, _) = plan.run_stage(k, &current)?;
        stages_run = k;
        let record = measure(&rotated, &[n], rng)?;
        if record.outcome == SUCCESS_OUTCOME {
            return Ok(UpdateOutcome {
                success: true,
                state: record.collapsed.register_block(n, SUCCESS_OUTCOME)?,
                exact_stage_probabilities: exact,
                cumulative_success: plan.cumulative_success(),
                stages_run,
                success_stage: Some(k),
            });
        }
        plan.check_residual(prior_state, k, &record.collapsed.register_block(n, 1)?)?;
        current = record.collapsed;
    }
    Ok(UpdateOutcome {
        success: false,
        state: current.register_block(n, 1)?,
        exact_stage_probabilities: exact,
        cumulative_success: plan.cumulative_success(),
        stages_run,
        success_stage: None,
    })
}

/// One rotation and one ancilla measurement.
pub fn single_shot_update<R: Rng + ?Sized>(
    prior_state: &StateVector,
    likelihood: &LikelihoodModel,
    config: ShotConfig,
    rng: &mut R,
) -> Result<UpdateOutcome> {
    let prior = PriorDistribution::from_state(prior_state)?;
    let c_squared = config.resolve(&prior, likelihood)?;
    let plan = Plan::new(prior_state, likelihood, vec![c_squared])?;
    run_iterative(prior_state, &plan, rng)
}

/// Stages with `c_k² = 1/M_k − 1/M_{k−1}`, stopping at the first success.
pub fn iterative_update<R: Rng + ?Sized>(
    prior_state: &StateVector,
    likelihood: &LikelihoodModel,
    schedule: &BoundSchedule,
    rng: &mut R,
) -> Result<UpdateOutcome> {
    let plan = Plan::new(prior_state, likelihood, schedule.c_squares())?;
    run_iterative(prior_state, &plan, rng)
}

/// Exact analysis of a schedule: every reachable stage is simulated on the
/// failure branch of the previous one, with both branches checked against
/// their closed forms.
pub fn iterative_trace(
    prior_state: &StateVector,
    likelihood: &LikelihoodModel,
    c_squares: &[f64],
) -> Result<IterativeTrace> {
    let plan = Plan::new(prior_state, likelihood, c_squares.to_vec())?;
    let n = prior_state.qubit_count();
    let target = posterior_state(prior_state, likelihood)?;
    let mut current = prior_state.with_ancillas(1)?;
    let mut stages = Vec::new();
    for k in 1..=plan.c_squares.len() {
        if !plan.reachable(k) {
            break;
        }
        let (rotated, probability) = plan.run_stage(k, &current)?;
        let success_fidelity = if probability > 0.0 {
            let (_, success) = postselect(&rotated, &[n], SUCCESS_OUTCOME)?;
            fidelity(&success.register_block(n, SUCCESS_OUTCOME)?, &target)?
        } else {
            0.0
        };
        let residual_error = if plan.reachable(k + 1) {
            let (_, failure) = postselect(&rotated, &[n], 1)?;
            let gap = plan.check_residual(prior_state, k, &failure.register_block(n, 1)?)?;
            current = failure;
            Some(gap)
        } else {
            None
        };
        stages.push(StageRecord {
            stage: k,
            c_squared: plan.c_squares[k - 1],
            probability,
            closed_form: plan.closed_form(k),
            recurrence_form: plan.recurrence_form(k),
            success_fidelity,
            residual_error,
        });
    }
    Ok(IterativeTrace {
        evidence: plan.evidence,
        bound: plan.evidence / max_likelihood_over_support(&plan.prior, likelihood)?,
        stages,
        cumulative_success: plan.cumulative_success(),
    })
}
