//! Executes a command on a validated experiment and assembles its report.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use qbayes_core::det::{
    apply_deterministic_update_with_order, exact_theta, general_update, iteration_plan, AngleEstimate,
    DeterministicUpdate, PhaseEstimator, PlanMode, ThetaSource,
};
use qbayes_core::models::{
    bayes_posterior, decompose_likelihood, max_likelihood_over_support, reconstruct_likelihood, HypothesisSet,
    PriorDistribution,
};
use qbayes_core::prob::{
    build_update_rotation, iterative_trace, iterative_update, posterior_state, single_shot_update,
    success_probability_bound, BoundSchedule, CSquaredMode, ShotConfig, SUCCESS_OUTCOME,
};
use qbayes_core::quantum::{fidelity, postselect, prepare_prior_circuit, sample_index, Circuit, StateVector};
use qbayes_core::rng::substream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, DetSettings, Experiment, ProbSettings};
use crate::error::{HarnessError, Result};
use crate::report::{
    Check, DetExact, DeterministicSection, EstimateStats, ExactSection, FidelityStats, OracleComparison, PhaseExact,
    ProbExact, RunReport, SampledSection, SuccessStats, Timing, TrialRow, REPORT_SCHEMA,
};

/// Tolerance for identities that hold exactly in exact arithmetic.
const EXACT: f64 = 1e-12;
/// Tolerance for results that pass through the fractional-phase solve.
const SOLVED: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    UpdateProb,
    UpdateDet,
    EstimateTheta,
    Bound,
    Decompose,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::UpdateProb => "update prob",
            Command::UpdateDet => "update det",
            Command::EstimateTheta => "estimate-theta",
            Command::Bound => "bound",
            Command::Decompose => "decompose",
            Command::Verify => "verify",
        }
    }
}

/// Quantities every command reports, plus the circuit and states they are
/// derived from.
struct Baseline {
    exact: ExactSection,
    posterior: PriorDistribution,
    prior_state: StateVector,
    oracle_state: StateVector,
    prepare: Circuit,
}

struct Draft {
    exact: ExactSection,
    oracle: OracleComparison,
    sampled: Option<SampledSection>,
    checks: Vec<Check>,
    rows: Vec<TrialRow>,
}

impl Draft {
    fn new(base: &Baseline, oracle: OracleComparison) -> Self {
        Self { exact: base.exact.clone(), oracle, sampled: None, checks: Vec::new(), rows: Vec::new() }
    }
}

/// Runs `command` on `experiment`: the exact analysis, the classical oracle
/// comparison and `trials` seeded trials spread over the rayon pool.
pub fn run_experiment(command: Command, experiment: &Experiment) -> Result<RunReport> {
    let start = Instant::now();
    let base = baseline(experiment)?;
    let draft = match command {
        Command::UpdateProb => run_prob(experiment, &base, prob_settings(command, experiment)?)?,
        Command::Bound => run_bound(experiment, &base)?,
        Command::UpdateDet => run_det(experiment, &base, det_settings(command, experiment)?, false)?,
        Command::EstimateTheta => run_det(experiment, &base, det_settings(command, experiment)?, true)?,
        Command::Decompose => run_decompose(experiment, &base, det_settings(command, experiment)?)?,
        Command::Verify => match &experiment.algorithm {
            Some(Algorithm::Det(settings)) => run_det(experiment, &base, *settings, false)?,
            Some(Algorithm::Prob(settings)) => run_prob(experiment, &base, settings.clone())?,
            None => run_prob(experiment, &base, ProbSettings::Shot(CSquaredMode::ExactMax))?,
        },
    };
    Ok(RunReport {
        schema: REPORT_SCHEMA.to_string(),
        deterministic: DeterministicSection {
            command: command.name().to_string(),
            config: experiment.config.clone(),
            master_seed: experiment.master_seed(),
            exact: draft.exact,
            oracle: draft.oracle,
            sampled: draft.sampled,
            checks: draft.checks,
            rows: draft.rows,
        },
        timing: Timing { wall_seconds: start.elapsed().as_secs_f64(), threads: rayon::current_num_threads() },
    })
}

fn prob_settings(command: Command, experiment: &Experiment) -> Result<ProbSettings> {
    match &experiment.algorithm {
        Some(Algorithm::Prob(settings)) => Ok(settings.clone()),
        None => Ok(ProbSettings::Shot(CSquaredMode::ExactMax)),
        Some(Algorithm::Det(_)) => {
            Err(HarnessError::config("algorithm.kind", format!("{} needs a prob algorithm", command.name())))
        }
    }
}

fn det_settings(command: Command, experiment: &Experiment) -> Result<DetSettings> {
    match &experiment.algorithm {
        Some(Algorithm::Det(settings)) => Ok(*settings),
        None => Ok(DetSettings::default()),
        Some(Algorithm::Prob(_)) if command == Command::Decompose => Ok(DetSettings::default()),
        Some(Algorithm::Prob(_)) => {
            Err(HarnessError::config("algorithm.kind", format!("{} needs a det algorithm", command.name())))
        }
    }
}

fn baseline(experiment: &Experiment) -> Result<Baseline> {
    let prior = &experiment.prior;
    let likelihood = &experiment.likelihood;
    let result = bayes_posterior(prior, likelihood)?;
    let max_likelihood = max_likelihood_over_support(prior, likelihood)?;
    let bound = success_probability_bound(prior, likelihood)?;
    let theta = experiment.two_valued().and_then(|(favored, _)| exact_theta(prior, &favored).ok());
    let prepare = prepare_prior_circuit(prior)?;
    let prior_state = prepare.prepare()?;
    let oracle_state = posterior_state(&prior_state, likelihood)?;
    Ok(Baseline {
        exact: ExactSection {
            evidence: result.evidence,
            max_likelihood,
            bound,
            theta,
            posterior: result.posterior.probs().to_vec(),
            prob: None,
            det: None,
            phase: None,
            decomposition: None,
        },
        posterior: result.posterior,
        prior_state,
        oracle_state,
        prepare,
    })
}

fn compare(base: &Baseline, state: &StateVector) -> Result<OracleComparison> {
    Ok(OracleComparison {
        fidelity: fidelity(state, &base.oracle_state)?,
        total_variation: PriorDistribution::from_state(state)?.total_variation(&base.posterior),
    })
}

/// `√(p(1−p)/n)`.
fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn par_trials<T, F>(trials: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

// Probabilistic update

fn run_prob(experiment: &Experiment, base: &Baseline, settings: ProbSettings) -> Result<Draft> {
    let likelihood = &experiment.likelihood;
    let c_squares = match &settings {
        ProbSettings::Shot(mode) => vec![ShotConfig::new(*mode).resolve(&experiment.prior, likelihood)?],
        ProbSettings::Schedule(schedule) => schedule.c_squares(),
    };
    let trace = iterative_trace(&base.prior_state, likelihood, &c_squares)?;

    let n = experiment.space.qubits();
    let rotation = build_update_rotation(&experiment.prior, likelihood, c_squares[0], None)?;
    let rotated = rotation.apply(&base.prior_state.with_ancillas(1)?)?;
    let (_, branch) = postselect(&rotated, &[n], SUCCESS_OUTCOME)?;
    let success_state = branch.register_block(n, SUCCESS_OUTCOME)?;

    let mut draft = Draft::new(base, compare(base, &success_state)?);
    let evidence = trace.evidence;
    let worst_fidelity = trace.stages.iter().map(|s| s.success_fidelity).fold(1.0, f64::min);
    let worst_form_gap = trace.stages.iter().map(|s| (s.closed_form - s.recurrence_form).abs()).fold(0.0, f64::max);
    let worst_sim_gap = trace.stages.iter().map(|s| (s.probability - s.closed_form).abs()).fold(0.0, f64::max);
    let worst_residual = trace.stages.iter().filter_map(|s| s.residual_error).fold(0.0, f64::max);
    draft.checks.push(Check::at_least("success_branch_fidelity", worst_fidelity, 1.0 - EXACT));
    draft.checks.push(Check::at_least("oracle_fidelity", draft.oracle.fidelity, 1.0 - EXACT));
    draft.checks.push(Check::close(
        "first_stage_probability",
        trace.stages[0].probability,
        c_squares[0] * evidence,
        EXACT,
    ));
    draft.checks.push(Check::at_most("stage_probability_forms", worst_form_gap.max(worst_sim_gap), EXACT));
    draft.checks.push(Check::at_most("failure_branch_residual", worst_residual, EXACT));
    draft.checks.push(Check::at_most("cumulative_success_bound", trace.cumulative_success, trace.bound + EXACT));

    let stages = c_squares.len();
    let trials = experiment.trials();
    if trials > 0 {
        let seed = experiment.master_seed();
        let schedule = schedule_of(&settings);
        let outcomes = par_trials(trials, |trial| {
            let mut rng = substream(seed, trial, 0);
            let outcome = match (schedule, &settings) {
                (Some(schedule), _) => iterative_update(&base.prior_state, likelihood, schedule, &mut rng)?,
                (None, ProbSettings::Shot(mode)) => {
                    single_shot_update(&base.prior_state, likelihood, ShotConfig::new(*mode), &mut rng)?
                }
                (None, ProbSettings::Schedule(_)) => unreachable!("schedules are matched above"),
            };
            let fidelity = if outcome.success { Some(fidelity(&outcome.state, &base.oracle_state)?) } else { None };
            Ok((outcome, fidelity))
        })?;

        let mut by_stage = vec![0u64; stages];
        let mut worst = 1.0f64;
        for (trial, (outcome, fid)) in outcomes.iter().enumerate() {
            if let Some(k) = outcome.success_stage {
                by_stage[k - 1] += 1;
            }
            if let Some(f) = fid {
                worst = worst.min(*f);
            }
            for k in 1..=stages {
                let outcome_bit = (k <= outcome.stages_run).then(|| u64::from(outcome.success_stage != Some(k)));
                draft.rows.push(TrialRow {
                    trial: trial as u64,
                    stage: k,
                    p_exact: outcome.exact_stage_probabilities.get(k - 1).copied(),
                    outcome: outcome_bit,
                    fidelity: if outcome.success_stage == Some(k) { *fid } else { None },
                });
            }
        }
        let successes: u64 = by_stage.iter().sum();
        let expected = trace.cumulative_success;
        let frequency = successes as f64 / trials as f64;
        let sigma = binomial_sigma(expected, trials);
        draft.checks.push(Check::close("success_frequency", frequency, expected, 4.0 * sigma));
        draft.checks.push(Check::at_least("sampled_success_fidelity", worst, 1.0 - EXACT));
        draft.sampled = Some(SampledSection {
            trials,
            success: Some(SuccessStats { successes, frequency, expected, sigma, by_stage }),
            histogram: Vec::new(),
            estimates: None,
            fidelity: None,
        });
    }

    draft.exact.prob =
        Some(ProbExact { c_squares, stages: trace.stages, cumulative_success: trace.cumulative_success });
    Ok(draft)
}

fn run_bound(experiment: &Experiment, base: &Baseline) -> Result<Draft> {
    let mut draft = run_prob(experiment, base, ProbSettings::Shot(CSquaredMode::ExactMax))?;
    let first = draft.exact.prob.as_ref().map(|p| p.stages[0].probability).unwrap_or(0.0);
    let closed = base.exact.evidence / base.exact.max_likelihood;
    draft.checks.push(Check::close("bound_attained", first, base.exact.bound, EXACT));
    draft.checks.push(Check::close("bound_closed_form", base.exact.bound, closed, EXACT));
    Ok(draft)
}

// Deterministic update

fn run_det(experiment: &Experiment, base: &Baseline, settings: DetSettings, force_estimate: bool) -> Result<Draft> {
    match experiment.two_valued() {
        Some((favored, suppression)) => {
            run_det_single(experiment, base, settings, &favored, suppression, force_estimate)
        }
        None if force_estimate => {
            Err(HarnessError::config("likelihood.kind", "estimate-theta needs a two_valued or elimination likelihood"))
        }
        None => run_det_general(experiment, base, settings),
    }
}

fn single_update(
    base: &Baseline,
    settings: &DetSettings,
    favored: &HypothesisSet,
    theta: f64,
    suppression: f64,
) -> Result<(qbayes_core::det::IterationPlan, DeterministicUpdate)> {
    let plan = iteration_plan(theta, suppression)?.with_mode(settings.mode);
    let update = apply_deterministic_update_with_order(&base.prepare, favored, &plan, settings.conjugation)?;
    Ok((plan, update))
}

fn run_det_single(
    experiment: &Experiment,
    base: &Baseline,
    settings: DetSettings,
    favored: &HypothesisSet,
    suppression: f64,
    force_estimate: bool,
) -> Result<Draft> {
    let theta = exact_theta(&experiment.prior, favored)?;
    let (plan, update) = single_update(base, &settings, favored, theta, suppression)?;
    let mut draft = Draft::new(base, compare(base, &update.state)?);
    match settings.mode {
        PlanMode::FractionalFinal => {
            draft.checks.push(Check::at_least("posterior_fidelity", update.achieved_fidelity, 1.0 - SOLVED))
        }
        PlanMode::ClosestInteger => draft.checks.push(Check::close(
            "predicted_fidelity",
            update.achieved_fidelity,
            update.predicted_fidelity,
            SOLVED,
        )),
    }
    draft.checks.push(Check::close("oracle_fidelity", draft.oracle.fidelity, update.achieved_fidelity, SOLVED));
    let probabilities = update.state.probabilities();
    draft.exact.det = Some(DetExact::Single {
        favored: favored.clone(),
        plan,
        full_iterations: update.full_iterations,
        fractional: update.fractional,
        predicted_fidelity: update.predicted_fidelity,
        achieved_fidelity: update.achieved_fidelity,
        probabilities: probabilities.clone(),
    });

    let estimate = force_estimate || matches!(settings.theta_source, ThetaSource::PhaseEstimation { .. });
    let estimator = if estimate {
        let estimator = PhaseEstimator::new(&base.prepare, favored, settings.bits, settings.epsilon)?;
        let first = estimator.estimate(0);
        draft.exact.phase = Some(PhaseExact {
            bits: settings.bits,
            epsilon: settings.epsilon,
            ancillas: estimator.ancillas(),
            delta: first.delta,
            distribution: estimator.distribution().to_vec(),
            failure_probability: estimator.failure_probability(theta),
        });
        Some(estimator)
    } else {
        None
    };

    let trials = experiment.trials();
    if trials == 0 {
        return Ok(draft);
    }
    let seed = experiment.master_seed();
    match estimator {
        None => {
            let outcomes =
                par_trials(trials, |trial| Ok(sample_index(&probabilities, &mut substream(seed, trial, 0))))?;
            let mut histogram = vec![0u64; probabilities.len()];
            for (trial, &h) in outcomes.iter().enumerate() {
                histogram[h] += 1;
                draft.rows.push(TrialRow {
                    trial: trial as u64,
                    stage: 1,
                    p_exact: Some(probabilities[h]),
                    outcome: Some(h as u64),
                    fidelity: Some(update.achieved_fidelity),
                });
            }
            draft.sampled = Some(SampledSection { trials, success: None, histogram, estimates: None, fidelity: None });
        }
        Some(estimator) => {
            let samples: Vec<AngleEstimate> =
                par_trials(trials, |trial| Ok(estimator.sample(&mut substream(seed, trial, 0))))?;
            let distinct: Vec<usize> = samples.iter().map(|s| s.outcome).collect::<BTreeSet<_>>().into_iter().collect();
            let fidelities: BTreeMap<usize, f64> = distinct
                .par_iter()
                .map(|&y| {
                    let theta_est = estimator.estimate(y).theta;
                    let (_, update) = single_update(base, &settings, favored, theta_est, suppression)?;
                    Ok((y, update.achieved_fidelity))
                })
                .collect::<Result<_>>()?;

            let mut histogram = vec![0u64; estimator.distribution().len()];
            let mut misses = 0u64;
            let mut violations = 0u64;
            let mut sum = 0.0;
            let mut min = 1.0f64;
            for (trial, s) in samples.iter().enumerate() {
                histogram[s.outcome] += 1;
                let error = (s.theta - theta).abs();
                if error > s.delta {
                    misses += 1;
                }
                let f = fidelities[&s.outcome];
                if f < s.fidelity_bound(error) - SOLVED {
                    violations += 1;
                }
                sum += f;
                min = min.min(f);
                draft.rows.push(TrialRow {
                    trial: trial as u64,
                    stage: 1,
                    p_exact: Some(estimator.distribution()[s.outcome]),
                    outcome: Some(s.outcome as u64),
                    fidelity: Some(f),
                });
            }
            let miss_frequency = misses as f64 / trials as f64;
            let miss_limit = settings.epsilon + 3.0 * (settings.epsilon / trials as f64).sqrt();
            draft.checks.push(Check::at_most("estimate_miss_rate", miss_frequency, miss_limit));
            if suppression == f64::INFINITY && settings.mode == PlanMode::FractionalFinal {
                draft.checks.push(Check::new(
                    "fidelity_bound",
                    violations == 0,
                    format!("{violations} of {trials} trials below 1 - (pi err / (2 theta_est))^2"),
                ));
            }
            draft.sampled = Some(SampledSection {
                trials,
                success: None,
                histogram,
                estimates: Some(EstimateStats { true_theta: theta, misses, miss_frequency, miss_limit, samples }),
                fidelity: Some(FidelityStats { min, mean: sum / trials as f64, violations }),
            });
        }
    }
    Ok(draft)
}

/// Fidelity floor of a staged update with `K` fraction bits.
pub fn staged_fidelity_floor(fraction_bits: u32) -> f64 {
    1.0 - 10.0 * 0.5f64.powi(fraction_bits as i32)
}

fn run_det_general(experiment: &Experiment, base: &Baseline, settings: DetSettings) -> Result<Draft> {
    let table = experiment.likelihood.to_table(experiment.space)?;
    let k = settings.fraction_bits;
    let seed = experiment.master_seed();
    let exact = general_update(
        &base.prepare,
        &table,
        k,
        ThetaSource::ExactClassical,
        settings.mode,
        &mut substream(seed, 0, 0),
    )?;
    let mut draft = Draft::new(base, compare(base, &exact.state)?);
    if settings.mode == PlanMode::FractionalFinal {
        draft.checks.push(Check::at_least("final_fidelity", exact.final_fidelity, staged_fidelity_floor(k)));
        let worst = exact.stages.iter().map(|s| s.achieved_fidelity).fold(1.0, f64::min);
        draft.checks.push(Check::at_least("stage_fidelity", worst, 1.0 - SOLVED));
    }
    draft.checks.push(Check::close("oracle_fidelity", draft.oracle.fidelity, exact.final_fidelity, EXACT));
    draft.exact.decomposition = Some(decompose_likelihood(&table, &experiment.prior.support(), k)?);
    draft.exact.det = Some(DetExact::General {
        fraction_bits: k,
        final_fidelity: exact.final_fidelity,
        total_variation: exact.total_variation,
        probabilities: exact.state.probabilities(),
        stages: exact.stages,
    });

    let trials = experiment.trials();
    if let (ThetaSource::PhaseEstimation { .. }, true) = (settings.theta_source, trials > 0) {
        let runs = par_trials(trials, |trial| {
            Ok(general_update(
                &base.prepare,
                &table,
                k,
                settings.theta_source,
                settings.mode,
                &mut substream(seed, trial, 0),
            )?)
        })?;
        let mut sum = 0.0;
        let mut min = 1.0f64;
        for (trial, run) in runs.iter().enumerate() {
            sum += run.final_fidelity;
            min = min.min(run.final_fidelity);
            for stage in &run.stages {
                draft.rows.push(TrialRow {
                    trial: trial as u64,
                    stage: stage.stage,
                    p_exact: None,
                    outcome: stage.estimate.as_ref().map(|e| e.outcome as u64),
                    fidelity: Some(stage.achieved_fidelity),
                });
            }
        }
        draft.sampled = Some(SampledSection {
            trials,
            success: None,
            histogram: Vec::new(),
            estimates: None,
            fidelity: Some(FidelityStats { min, mean: sum / trials as f64, violations: 0 }),
        });
    }
    Ok(draft)
}

fn run_decompose(experiment: &Experiment, base: &Baseline, settings: DetSettings) -> Result<Draft> {
    let exact = DetSettings { theta_source: ThetaSource::ExactClassical, ..settings };
    let mut draft = run_det_general(&experiment.clone().with_trials(0), base, exact)?;
    let table = experiment.likelihood.to_table(experiment.space)?;
    let decomposition = draft.exact.decomposition.as_ref().expect("general runs record their decomposition");
    let kept: Vec<usize> = match &decomposition.elimination {
        Some(set) => set.iter().copied().collect(),
        None => experiment.prior.support().into_iter().collect(),
    };
    let min = kept.iter().map(|&h| table[h]).fold(f64::INFINITY, f64::min);
    let rebuilt = reconstruct_likelihood(&decomposition.stages, table.len());
    let gap = kept.iter().map(|&h| (rebuilt[h].log2() - (table[h] / min).log2()).abs()).fold(0.0, f64::max);
    draft.checks.push(Check::at_most(
        "reconstruction_log2_gap",
        gap,
        0.5f64.powi(settings.fraction_bits as i32) + EXACT,
    ));
    Ok(draft)
}

fn schedule_of(settings: &ProbSettings) -> Option<&BoundSchedule> {
    match settings {
        ProbSettings::Schedule(schedule) => Some(schedule),
        ProbSettings::Shot(_) => None,
    }
}
