//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every expected value is recomputed here from the classical
//! definitions rather than read back from the library.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use qbayes_core::det::{
    ancilla_count, apply_deterministic_update, build_grover_operator, general_update, iteration_plan, PlanMode,
    ThetaSource,
};
use qbayes_core::models::{HypothesisSet, LikelihoodModel, PriorDistribution};
use qbayes_core::prob::{
    build_update_rotation, iterative_trace, single_shot_update, BoundSchedule, CSquaredMode, ShotConfig,
};
use qbayes_core::quantum::{postselect, prepare_prior_circuit, StateVector};
use qbayes_core::rng::{substream, SimRng};
use qbayes_harness::report::DetExact;
use qbayes_harness::{parse_config, run_experiment, Command, RunReport};
use rand::Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($fmt)+));
        }
    };
}

// Classical oracles

fn random_prior(size: usize, rng: &mut SimRng) -> Vec<f64> {
    let w: Vec<f64> = (0..size).map(|_| rng.gen::<f64>() + 0.01).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

fn random_table(size: usize, rng: &mut SimRng) -> Vec<f64> {
    let mut t: Vec<f64> = (0..size).map(|_| rng.gen::<f64>()).collect();
    let k = rng.gen_range(0..size);
    t[k] = t[k].max(0.05);
    t
}

fn evidence(prior: &[f64], table: &[f64]) -> f64 {
    prior.iter().zip(table).map(|(p, l)| p * l).sum()
}

fn posterior(prior: &[f64], table: &[f64]) -> Vec<f64> {
    let z = evidence(prior, table);
    prior.iter().zip(table).map(|(p, l)| p * l / z).collect()
}

fn max_on_support(prior: &[f64], table: &[f64]) -> f64 {
    prior.iter().zip(table).filter(|(p, _)| **p > 0.0).map(|(_, l)| *l).fold(0.0, f64::max)
}

/// `|Σ conj(a_h) √q_h|²` for a state against a distribution.
fn overlap(amps: &[Complex64], probs: &[f64]) -> f64 {
    amps.iter().zip(probs).map(|(a, q)| a.conj() * q.sqrt()).sum::<Complex64>().norm_sqr()
}

fn real_state(probs: &[f64]) -> StateVector {
    StateVector::from_real(&probs.iter().map(|p| p.sqrt()).collect::<Vec<_>>()).unwrap()
}

fn uniform(size: usize) -> Vec<f64> {
    vec![1.0 / size as f64; size]
}

fn elimination_posterior(prior: &[f64], favored: &HypothesisSet) -> Vec<f64> {
    let table: Vec<f64> = (0..prior.len()).map(|h| if favored.contains(&h) { 1.0 } else { 0.0 }).collect();
    posterior(prior, &table)
}

fn success_branch(prior: &[f64], table: &[f64], c_squared: f64) -> Result<(f64, StateVector), String> {
    let n = prior.len().trailing_zeros() as usize;
    let dist = PriorDistribution::new(prior.to_vec()).map_err(|e| e.to_string())?;
    let lik = LikelihoodModel::table(table.to_vec()).map_err(|e| e.to_string())?;
    let rotation = build_update_rotation(&dist, &lik, c_squared, None).map_err(|e| e.to_string())?;
    let rotated = rotation.apply(&real_state(prior).with_ancillas(1).unwrap()).unwrap();
    let (p, branch) = postselect(&rotated, &[n], 0).map_err(|e| e.to_string())?;
    Ok((p, branch.register_block(n, 0).unwrap()))
}

fn report(command: Command, config: &str) -> Result<RunReport, String> {
    let experiment = parse_config(config).map_err(|e| e.to_string())?;
    run_experiment(command, &experiment).map_err(|e| e.to_string())
}

// Criteria

fn bayes_oracle_equivalence() -> Outcome {
    let mut rng = substream(1001, 0, 0);
    let mut worst = 1.0f64;
    let mut sampled = 0;
    for pair in 0..100u64 {
        let size = 1 << rng.gen_range(1..=6);
        let prior = random_prior(size, &mut rng);
        let table = random_table(size, &mut rng);
        let target = posterior(&prior, &table);
        let (_, state) = success_branch(&prior, &table, 1.0 / max_on_support(&prior, &table))?;
        worst = worst.min(overlap(state.amplitudes(), &target));
        let lik = LikelihoodModel::table(table.clone()).unwrap();
        let mut shot = substream(1001, pair + 1, 0);
        let out = single_shot_update(&real_state(&prior), &lik, ShotConfig::new(CSquaredMode::ExactMax), &mut shot)
            .map_err(|e| e.to_string())?;
        if out.success {
            sampled += 1;
            worst = worst.min(overlap(out.state.amplitudes(), &target));
        }
    }
    ensure!(worst >= 1.0 - 1e-12, "worst fidelity {worst:e}");
    Ok(format!("100 pairs, {sampled} sampled successes, min fidelity 1 - {:.1e}", 1.0 - worst))
}

fn success_probability_law() -> Outcome {
    let mut rng = substream(1002, 0, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let size = 1 << rng.gen_range(1..=6);
        let prior = random_prior(size, &mut rng);
        let table = random_table(size, &mut rng);
        let pd = evidence(&prior, &table);
        let max = max_on_support(&prior, &table);
        let m = max + (1.0 - max) * rng.gen::<f64>();
        for c2 in [1.0, 1.0 / m, 1.0 / max] {
            let (p, _) = success_branch(&prior, &table, c2)?;
            worst = worst.max((p - c2 * pd).abs());
        }
        let (p, _) = success_branch(&prior, &table, 1.0 / max)?;
        worst = worst.max((p - pd / max).abs());
    }
    ensure!(worst <= 1e-12, "largest deviation {worst:e}");
    let worked = [0.5, 0.25, 0.125, 0.125];
    let (trivial, _) = success_branch(&uniform(4), &worked, 1.0)?;
    let (best, _) = success_branch(&uniform(4), &worked, 2.0)?;
    ensure!((trivial - 0.25).abs() <= 1e-12 && (best - 0.5).abs() <= 1e-12, "worked {trivial}, {best}");
    let bound = report(Command::Bound, WORKED)?;
    ensure!(
        (bound.deterministic.exact.bound - 0.5).abs() <= 1e-12,
        "reported bound {}",
        bound.deterministic.exact.bound
    );
    Ok(format!("worked 0.25 and 0.5; 100 pairs within {worst:.1e}"))
}

const WORKED: &str = r#"{"schema": "qbayes.config/1", "qubits": 2, "prior": {"kind": "uniform"},
    "likelihood": {"kind": "table", "values": [0.5, 0.25, 0.125, 0.125]}}"#;

/// `p_k = Σ P(h)L(h)c_k² / Σ P(h)(1 − L(h)Σ_{s<k} c_s²)`: success weight
/// over the weight left on the failure branch.
fn stage_probabilities(prior: &[f64], table: &[f64], c_squares: &[f64]) -> Vec<f64> {
    let mut before = 0.0;
    let mut out = Vec::new();
    for &c2 in c_squares {
        let fail: f64 = prior.iter().zip(table).map(|(p, l)| p * (1.0 - l * before)).sum();
        let win: f64 = prior.iter().zip(table).map(|(p, l)| p * l * c2).sum();
        out.push(if fail > 0.0 { win / fail } else { 0.0 });
        before += c2;
    }
    out
}

fn iterative_optimality() -> Outcome {
    let worked = [0.5, 0.25, 0.125, 0.125];
    let schedule = BoundSchedule::new(vec![1.0, 0.5]).map_err(|e| e.to_string())?;
    let lik = LikelihoodModel::table(worked.to_vec()).unwrap();
    let trace = iterative_trace(&real_state(&uniform(4)), &lik, &schedule.c_squares()).map_err(|e| e.to_string())?;
    let p: Vec<f64> = trace.stages.iter().map(|s| s.probability).collect();
    ensure!(p.len() == 2 && (p[0] - 0.25).abs() <= 1e-12 && (p[1] - 1.0 / 3.0).abs() <= 1e-12, "stages {p:?}");
    let combined = p[0] + (1.0 - p[0]) * p[1];
    ensure!((combined - 0.5).abs() <= 1e-12, "cumulative {combined}");
    ensure!((trace.cumulative_success - 0.5).abs() <= 1e-12, "reported cumulative {}", trace.cumulative_success);

    let mut rng = substream(1003, 0, 0);
    let mut form_gap = 0.0f64;
    let mut slack = f64::INFINITY;
    for _ in 0..100 {
        let size = 1 << rng.gen_range(1..=5);
        let prior = random_prior(size, &mut rng);
        let table = random_table(size, &mut rng);
        let max = max_on_support(&prior, &table);
        let mut bounds: Vec<f64> = (0..rng.gen_range(1..=5)).map(|_| max + (1.0 - max) * rng.gen::<f64>()).collect();
        bounds.sort_by(|a, b| b.total_cmp(a));
        bounds.dedup();
        if rng.gen_bool(0.5) {
            bounds.push(max);
            bounds.dedup();
        }
        let schedule = BoundSchedule::new(bounds).map_err(|e| e.to_string())?;
        let lik = LikelihoodModel::table(table.clone()).unwrap();
        let trace = iterative_trace(&real_state(&prior), &lik, &schedule.c_squares()).map_err(|e| e.to_string())?;
        let expected = stage_probabilities(&prior, &table, &schedule.c_squares());
        for s in &trace.stages {
            form_gap = form_gap.max((s.closed_form - s.recurrence_form).abs());
            form_gap = form_gap.max((s.probability - expected[s.stage - 1]).abs());
        }
        let bound = evidence(&prior, &table) / max;
        ensure!(
            trace.cumulative_success <= bound + 1e-12,
            "cumulative {} above bound {bound}",
            trace.cumulative_success
        );
        slack = slack.min(bound - trace.cumulative_success);
    }
    ensure!(form_gap <= 1e-12, "stage probability forms differ by {form_gap:e}");
    Ok(format!("(0.25, 1/3) -> 0.5; 100 schedules, forms within {form_gap:.1e}, min slack {slack:.1e}"))
}

fn trace_decreasing() -> Outcome {
    let lik = LikelihoodModel::table(vec![0.5, 0.5, 0.0, 0.5]).unwrap();
    let priors = [(vec![0.0, 0.5, 0.5, 0.0], 1usize), (vec![0.0, 0.0, 0.5, 0.5], 3usize)];
    let mut states = Vec::new();
    for (prior, expected) in &priors {
        let state = real_state(prior);
        let mut trial = 0;
        let out = loop {
            let out = single_shot_update(
                &state,
                &lik,
                ShotConfig::new(CSquaredMode::ExactMax),
                &mut substream(1004, trial, 0),
            )
            .map_err(|e| e.to_string())?;
            if out.success {
                break out;
            }
            trial += 1;
        };
        let mut basis = vec![0.0; 4];
        basis[*expected] = 1.0;
        ensure!(overlap(out.state.amplitudes(), &basis) >= 1.0 - 1e-12, "prior {prior:?} missed |{expected}>");
        states.push(out.state);
    }
    let mutual = states[0].inner(&states[1]).unwrap().norm();
    ensure!(mutual <= 1e-12, "posterior overlap {mutual:e}");
    Ok(format!("|1> and |3>, overlap {mutual:.1e}"))
}

fn grover_rotation_law() -> Outcome {
    let mut rng = substream(1005, 0, 0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let size = 1 << rng.gen_range(1..=5);
        let prior = random_prior(size, &mut rng);
        let favored: HypothesisSet = (0..size).filter(|_| rng.gen_bool(0.4)).collect();
        let favored = if favored.is_empty() || favored.len() == size { [0].into_iter().collect() } else { favored };
        let weight: f64 = favored.iter().map(|&h| prior[h]).sum();
        let theta = 2.0 * weight.sqrt().asin();
        let alpha: Vec<Complex64> = (0..size)
            .map(|h| {
                if favored.contains(&h) {
                    Complex64::new((prior[h] / weight).sqrt(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let prepare = prepare_prior_circuit(&PriorDistribution::new(prior.clone()).unwrap()).unwrap();
        let op = build_grover_operator(&prepare, &favored, PI, PI).map_err(|e| e.to_string())?;
        let mut state = prepare.prepare().unwrap();
        for k in 0..=5 {
            let projected = alpha.iter().zip(state.amplitudes()).map(|(a, s)| a.conj() * s).sum::<Complex64>().norm();
            let expected = ((2 * k + 1) as f64 * theta / 2.0).sin().abs();
            worst = worst.max((projected - expected).abs());
            op.circuit().apply_in_place(&mut state).unwrap();
        }
    }
    ensure!(worst <= 1e-9, "largest deviation {worst:e}");

    let grover = report(
        Command::UpdateDet,
        r#"{"schema": "qbayes.config/1", "qubits": 2, "prior": {"kind": "uniform"},
            "likelihood": {"kind": "elimination", "favored": [3]},
            "algorithm": {"kind": "det", "theta_source": "exact_classical"}}"#,
    )?;
    let Some(DetExact::Single { plan, full_iterations, probabilities, achieved_fidelity, .. }) =
        &grover.deterministic.exact.det
    else {
        return Err("no deterministic section".into());
    };
    ensure!((plan.iterations - 1.0).abs() <= 1e-12 && *full_iterations == 1, "T = {}", plan.iterations);
    ensure!(probabilities[3] >= 1.0 - 1e-12, "P(3) = {}", probabilities[3]);
    ensure!(*achieved_fidelity >= 1.0 - 1e-12, "fidelity {achieved_fidelity}");
    Ok(format!("50 instances x k=0..5 within {worst:.1e}; uniform-4 T = 1, P(3) = 1 - {:.1e}", 1.0 - probabilities[3]))
}

struct EstimateInstance {
    prior: Vec<f64>,
    favored: HypothesisSet,
    report: RunReport,
    elapsed: Duration,
}

fn estimate_instances() -> Result<Vec<EstimateInstance>, String> {
    let mut rng = substream(1006, 0, 0);
    let mut out = Vec::new();
    for instance in 0..3u64 {
        let size = 8;
        let prior = random_prior(size, &mut rng);
        let favored: HypothesisSet = (0..size).filter(|_| rng.gen_bool(0.3)).collect();
        let favored = if favored.is_empty() { [instance as usize].into_iter().collect() } else { favored };
        let config = serde_json::json!({
            "schema": "qbayes.config/1",
            "qubits": 3,
            "prior": {"kind": "table", "probs": prior},
            "likelihood": {"kind": "elimination", "favored": favored},
            "algorithm": {"kind": "det", "theta_source": "phase_estimation", "bits": 3, "epsilon": 0.125, "mode": "fractional_final"},
            "trials": 2000,
            "master_seed": 6000 + instance,
        });
        let start = Instant::now();
        let report = report(Command::EstimateTheta, &config.to_string())?;
        out.push(EstimateInstance { prior, favored, report, elapsed: start.elapsed() });
    }
    Ok(out)
}

fn phase_estimation(instances: &[EstimateInstance]) -> Outcome {
    let t = ancilla_count(3, 0.125).map_err(|e| e.to_string())?;
    ensure!(t == 6, "t = {t}");
    let limit = 0.125 + 3.0 * (0.125f64 / 2000.0).sqrt();
    let mut summary = Vec::new();
    for inst in instances {
        let weight: f64 = inst.favored.iter().map(|&h| inst.prior[h]).sum();
        let theta = 2.0 * weight.sqrt().asin();
        let samples = &inst.report.deterministic.sampled.as_ref().ok_or("no sampled section")?.estimates;
        let samples = &samples.as_ref().ok_or("no estimates")?.samples;
        ensure!(samples.len() == 2000, "{} trials", samples.len());
        let n = (1usize << t) as f64;
        let misses = samples
            .iter()
            .filter(|s| {
                let y = s.outcome as f64;
                let folded = 2.0 * PI * y.min(n - y) / n;
                let folded = if folded == 0.0 { PI / n } else { folded };
                (folded - theta).abs() > 2.0 * PI / 8.0
            })
            .count();
        let freq = misses as f64 / 2000.0;
        ensure!(freq <= limit, "miss frequency {freq} above {limit}");
        ensure!(inst.elapsed <= Duration::from_secs(30), "took {:?}", inst.elapsed);
        summary.push(format!("{freq:.4} in {:.2}s", inst.elapsed.as_secs_f64()));
    }
    Ok(format!("t = 6, limit {limit:.4}; 3 x 2000 trials: {}", summary.join(", ")))
}

fn fidelity_bound(instances: &[EstimateInstance]) -> Outcome {
    let mut trials = 0;
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for inst in instances {
        let weight: f64 = inst.favored.iter().map(|&h| inst.prior[h]).sum();
        let theta = 2.0 * weight.sqrt().asin();
        let target = elimination_posterior(&inst.prior, &inst.favored);
        let prepare = prepare_prior_circuit(&PriorDistribution::new(inst.prior.clone()).unwrap()).unwrap();
        let samples = &inst.report.deterministic.sampled.as_ref().unwrap().estimates.as_ref().unwrap().samples;
        let outcomes: BTreeSet<usize> = samples.iter().map(|s| s.outcome).collect();
        let mut measured = std::collections::BTreeMap::new();
        for y in outcomes {
            let estimate = samples.iter().find(|s| s.outcome == y).unwrap().theta;
            let plan = iteration_plan(estimate, f64::INFINITY).map_err(|e| e.to_string())?;
            let update = apply_deterministic_update(&prepare, &inst.favored, &plan).map_err(|e| e.to_string())?;
            measured.insert(y, overlap(update.state.amplitudes(), &target));
        }
        for s in samples {
            let bound = 1.0 - (PI * (s.theta - theta).abs() / (2.0 * s.theta)).powi(2);
            let f = measured[&s.outcome];
            trials += 1;
            tightest = tightest.min(f - bound);
            if f < bound - 1e-9 {
                violations += 1;
            }
        }
    }
    ensure!(violations == 0, "{violations} of {trials} trials below the bound");
    Ok(format!("{trials} trials, 0 violations, min margin {tightest:.3e}"))
}

fn two_valued_update() -> Outcome {
    let plan = iteration_plan(PI / 2.0, 3.0).map_err(|e| e.to_string())?;
    ensure!((plan.theta_prime - 2.0 * PI / 3.0).abs() <= 1e-12, "theta' = {}", plan.theta_prime);
    ensure!((plan.iterations - 1.0 / 6.0).abs() <= 1e-12, "T = {}", plan.iterations);
    let target = [0.375, 0.375, 0.125, 0.125];
    let config = |mode: &str| {
        format!(
            r#"{{"schema": "qbayes.config/1", "qubits": 2, "prior": {{"kind": "uniform"}},
                "likelihood": {{"kind": "two_valued", "favored": [0, 1], "r": 3}},
                "algorithm": {{"kind": "det", "mode": "{mode}"}}}}"#
        )
    };
    let exact = report(Command::UpdateDet, &config("fractional_final"))?;
    ensure!(
        exact.deterministic.exact.posterior.iter().zip(target).all(|(p, q)| (p - q).abs() <= 1e-12),
        "oracle posterior"
    );
    let prepare = prepare_prior_circuit(&PriorDistribution::new(uniform(4)).unwrap()).unwrap();
    let favored: HypothesisSet = [0, 1].into_iter().collect();
    let state = apply_deterministic_update(&prepare, &favored, &plan).map_err(|e| e.to_string())?.state;
    let f = overlap(state.amplitudes(), &target);
    ensure!(f >= 1.0 - 1e-9, "fractional fidelity {f}");
    ensure!(
        exact.deterministic.oracle.fidelity >= 1.0 - 1e-9,
        "reported fidelity {}",
        exact.deterministic.oracle.fidelity
    );

    let rounded = report(Command::UpdateDet, &config("closest_integer"))?;
    let Some(DetExact::Single { achieved_fidelity, full_iterations, .. }) = &rounded.deterministic.exact.det else {
        return Err("no deterministic section".into());
    };
    let expected = (PI / 12.0).cos();
    let state = apply_deterministic_update(&prepare, &favored, &plan.with_mode(PlanMode::ClosestInteger))
        .map_err(|e| e.to_string())?
        .state;
    let amplitude_fidelity = overlap(state.amplitudes(), &target).sqrt();
    ensure!(*full_iterations == 0, "closest integer ran {full_iterations} iterations");
    ensure!((achieved_fidelity - expected).abs() <= 1e-9, "reported F = {achieved_fidelity}");
    ensure!((amplitude_fidelity - expected).abs() <= 1e-9, "measured F = {amplitude_fidelity}");
    Ok(format!("theta' = 2pi/3, T = 1/6, fractional 1 - {:.1e}, closest {achieved_fidelity:.12}", 1.0 - f))
}

fn general_models() -> Outcome {
    let worked = [0.5, 0.25, 0.125, 0.125];
    let prepare = prepare_prior_circuit(&PriorDistribution::new(uniform(4)).unwrap()).unwrap();
    let run = |prepare: &qbayes_core::quantum::Circuit, table: &[f64], bits: u32| {
        general_update(
            prepare,
            table,
            bits,
            ThetaSource::ExactClassical,
            PlanMode::FractionalFinal,
            &mut substream(0, 0, 0),
        )
        .map_err(|e| e.to_string())
    };
    let dyadic = run(&prepare, &worked, 16)?;
    let f = overlap(dyadic.state.amplitudes(), &posterior(&uniform(4), &worked));
    ensure!(dyadic.stages.len() == 2, "{} stages", dyadic.stages.len());
    ensure!(f >= 1.0 - 1e-9, "dyadic fidelity {f}");

    let mut rng = substream(1009, 0, 0);
    let floor = 1.0 - 10.0 * 0.5f64.powi(8);
    let mut worst = 1.0f64;
    for table_index in 0..20 {
        let size = 1 << rng.gen_range(2..=4);
        let prior = random_prior(size, &mut rng);
        let table: Vec<f64> = (0..size).map(|_| 0.02 + 0.98 * rng.gen::<f64>()).collect();
        let prepare = prepare_prior_circuit(&PriorDistribution::new(prior.clone()).unwrap()).unwrap();
        let target = posterior(&prior, &table);
        let mut last = 0.0;
        for bits in 4..=8 {
            let f = overlap(run(&prepare, &table, bits)?.state.amplitudes(), &target);
            ensure!(f >= last - 1e-12, "table {table_index}: fidelity fell from {last} to {f} at K = {bits}");
            last = f;
        }
        ensure!(last >= floor, "table {table_index}: fidelity {last} below {floor}");
        worst = worst.min(last);
    }
    Ok(format!("dyadic 2 stages at 1 - {:.1e}; 20 tables, K = 8 min {worst:.9}", 1.0 - f))
}

fn reproducibility() -> Outcome {
    let configs = [
        (
            Command::UpdateProb,
            r#"{"schema": "qbayes.config/1", "qubits": 2, "prior": {"kind": "uniform"},
                "likelihood": {"kind": "table", "values": [0.5, 0.25, 0.125, 0.125]},
                "algorithm": {"kind": "prob", "mode": "schedule", "bounds": [1.0, 0.7, 0.5]},
                "trials": 500, "master_seed": 9}"#
                .to_string(),
        ),
        (
            Command::EstimateTheta,
            r#"{"schema": "qbayes.config/1", "qubits": 3, "prior": {"kind": "random", "seed": 3},
                "likelihood": {"kind": "elimination", "favored": [2, 5]},
                "algorithm": {"kind": "det", "theta_source": "phase_estimation"}, "trials": 300, "master_seed": 17}"#
                .to_string(),
        ),
        (
            Command::UpdateDet,
            r#"{"schema": "qbayes.config/1", "qubits": 2, "prior": {"kind": "geometric", "ratio": 0.6},
                "likelihood": {"kind": "table", "values": [0.9, 0.4, 0.7, 0.2]},
                "algorithm": {"kind": "det", "theta_source": "phase_estimation", "fraction_bits": 6},
                "trials": 20, "master_seed": 23}"#
                .to_string(),
        ),
    ];
    let pool = |threads: usize| rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    for (command, config) in &configs {
        let first = report(*command, config)?.deterministic_json();
        let again = report(*command, config)?.deterministic_json();
        let single = pool(1).install(|| report(*command, config))?.deterministic_json();
        let many = pool(4).install(|| report(*command, config))?.deterministic_json();
        ensure!(first == again, "{} differs between runs", command.name());
        ensure!(first == single && first == many, "{} differs across thread counts", command.name());
    }
    Ok(format!("{} configs identical across repeats and 1/4/default threads", configs.len()))
}

fn main() {
    let start = Instant::now();
    let instances = estimate_instances();
    let phase = |f: fn(&[EstimateInstance]) -> Outcome| match &instances {
        Ok(instances) => f(instances),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("bayes oracle equivalence", bayes_oracle_equivalence()),
        ("success probability law", success_probability_law()),
        ("iterative optimality", iterative_optimality()),
        ("trace-decreasing demonstration", trace_decreasing()),
        ("rotation law", grover_rotation_law()),
        ("phase estimation", phase(phase_estimation)),
        ("fidelity bound", phase(fidelity_bound)),
        ("two-valued update", two_valued_update()),
        ("general models", general_models()),
        ("reproducibility", reproducibility()),
    ];
    let mut failed = 0;
    for (index, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", index + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", index + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
