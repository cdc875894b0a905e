//! Experiment configuration: a versioned JSON document describing the
//! register, the prior, the likelihood and the algorithm to run.

use std::path::Path;

use qbayes_core::det::{extended_real, ConjugationOrder, PlanMode, ThetaSource};
use qbayes_core::models::{HypothesisSet, HypothesisSpace, LikelihoodModel, PriorDistribution, DEFAULT_FRACTION_BITS};
use qbayes_core::prob::{BoundSchedule, CSquaredMode};
use qbayes_core::rng::substream;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const CONFIG_SCHEMA: &str = "qbayes.config/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub qubits: usize,
    pub prior: PriorSpec,
    pub likelihood: LikelihoodSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<AlgorithmSpec>,
    #[serde(default)]
    pub trials: u64,
    #[serde(default)]
    pub master_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    Uniform,
    Table { probs: Vec<f64> },
    Point { h: usize },
    Geometric { ratio: f64 },
    Random { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LikelihoodSpec {
    Table {
        values: Vec<f64>,
    },
    TwoValued {
        favored: HypothesisSet,
        #[serde(with = "extended_real")]
        r: f64,
    },
    Elimination {
        favored: HypothesisSet,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbMode {
    Trivial,
    Bound,
    ExactMax,
    Schedule,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSourceKind {
    #[default]
    ExactClassical,
    PhaseEstimation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    Prob {
        mode: ProbMode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<Vec<f64>>,
    },
    Det {
        #[serde(default)]
        theta_source: ThetaSourceKind,
        #[serde(default = "default_bits")]
        bits: u32,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default)]
        mode: PlanMode,
        #[serde(default = "default_fraction_bits")]
        fraction_bits: u32,
        #[serde(default)]
        conjugation: ConjugationOrder,
    },
}

fn default_bits() -> u32 {
    3
}

fn default_epsilon() -> f64 {
    0.125
}

fn default_fraction_bits() -> u32 {
    DEFAULT_FRACTION_BITS
}

/// How the probabilistic update picks its rotation constants.
#[derive(Clone, Debug, PartialEq)]
pub enum ProbSettings {
    Shot(CSquaredMode),
    Schedule(BoundSchedule),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetSettings {
    pub theta_source: ThetaSource,
    /// Accuracy bits and failure budget for phase estimation.
    pub bits: u32,
    pub epsilon: f64,
    pub mode: PlanMode,
    pub fraction_bits: u32,
    pub conjugation: ConjugationOrder,
}

impl Default for DetSettings {
    fn default() -> Self {
        Self {
            theta_source: ThetaSource::ExactClassical,
            bits: default_bits(),
            epsilon: default_epsilon(),
            mode: PlanMode::default(),
            fraction_bits: default_fraction_bits(),
            conjugation: ConjugationOrder::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Algorithm {
    Prob(ProbSettings),
    Det(DetSettings),
}

/// A validated configuration with its module inputs built.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub space: HypothesisSpace,
    pub prior: PriorDistribution,
    pub likelihood: LikelihoodModel,
    pub algorithm: Option<Algorithm>,
}

impl Experiment {
    pub fn trials(&self) -> u64 {
        self.config.trials
    }

    pub fn master_seed(&self) -> u64 {
        self.config.master_seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.config.master_seed = seed;
        self
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.config.trials = trials;
        self
    }

    /// Favored set and suppression `r` of a two-valued or elimination model.
    pub fn two_valued(&self) -> Option<(HypothesisSet, f64)> {
        match &self.config.likelihood {
            LikelihoodSpec::Table { .. } => None,
            LikelihoodSpec::TwoValued { favored, r } => Some((favored.clone(), *r)),
            LikelihoodSpec::Elimination { favored } => Some((favored.clone(), f64::INFINITY)),
        }
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<Experiment> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| HarnessError::Io { context: format!("reading {}", path.display()), source })?;
    parse_config(&text)
}

/// Parses and validates a configuration document. Diagnostics start with the
/// line and column for syntax and schema errors, or with the field path for
/// semantic ones.
pub fn parse_config(text: &str) -> Result<Experiment> {
    let config: ExperimentConfig = serde_json::from_str(text)
        .map_err(|e| HarnessError::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
    resolve(config)
}

pub fn resolve(config: ExperimentConfig) -> Result<Experiment> {
    if config.schema != CONFIG_SCHEMA {
        return Err(HarnessError::config("schema", format!("expected {CONFIG_SCHEMA:?}, got {:?}", config.schema)));
    }
    let space = HypothesisSpace::new(config.qubits).map_err(|e| HarnessError::config("qubits", e))?;
    let prior = build_prior(&config.prior, space)?;
    let likelihood = build_likelihood(&config.likelihood, space)?;
    let algorithm = config.algorithm.as_ref().map(|spec| build_algorithm(spec, &config.likelihood)).transpose()?;
    Ok(Experiment { config, space, prior, likelihood, algorithm })
}

fn build_prior(spec: &PriorSpec, space: HypothesisSpace) -> Result<PriorDistribution> {
    match spec {
        PriorSpec::Uniform => Ok(PriorDistribution::uniform(space)),
        PriorSpec::Table { probs } => {
            if probs.len() != space.size() {
                return Err(HarnessError::config(
                    "prior.probs",
                    format!("expected {} entries, got {}", space.size(), probs.len()),
                ));
            }
            PriorDistribution::new(probs.clone()).map_err(|e| HarnessError::config("prior.probs", e))
        }
        PriorSpec::Point { h } => {
            PriorDistribution::point_mass(space, *h).map_err(|e| HarnessError::config("prior.h", e))
        }
        PriorSpec::Geometric { ratio } => {
            PriorDistribution::geometric(space, *ratio).map_err(|e| HarnessError::config("prior.ratio", e))
        }
        PriorSpec::Random { seed } => Ok(PriorDistribution::random(space, &mut substream(*seed, 0, 0))),
    }
}

fn build_likelihood(spec: &LikelihoodSpec, space: HypothesisSpace) -> Result<LikelihoodModel> {
    let (field, model) = match spec {
        LikelihoodSpec::Table { values } => ("likelihood.values", LikelihoodModel::table(values.clone())),
        LikelihoodSpec::TwoValued { favored, r } => {
            if r.is_nan() || *r <= 1.0 {
                return Err(HarnessError::config("likelihood.r", format!("suppression {r} must exceed 1")));
            }
            ("likelihood.favored", LikelihoodModel::with_suppression(favored.clone(), *r))
        }
        LikelihoodSpec::Elimination { favored } => {
            ("likelihood.favored", LikelihoodModel::elimination(favored.clone()))
        }
    };
    let model = model.map_err(|e| HarnessError::config(field, e))?;
    model.check_space(space).map_err(|e| HarnessError::config(field, e))?;
    Ok(model)
}

fn build_algorithm(spec: &AlgorithmSpec, likelihood: &LikelihoodSpec) -> Result<Algorithm> {
    match spec {
        AlgorithmSpec::Prob { mode, bound, bounds } => {
            let settings = match mode {
                ProbMode::Trivial => ProbSettings::Shot(CSquaredMode::Trivial),
                ProbMode::ExactMax => ProbSettings::Shot(CSquaredMode::ExactMax),
                ProbMode::Bound => {
                    let m = bound.ok_or_else(|| HarnessError::config("algorithm.bound", "required for mode bound"))?;
                    if !(m > 0.0 && m <= 1.0) {
                        return Err(HarnessError::config("algorithm.bound", format!("{m} outside (0, 1]")));
                    }
                    ProbSettings::Shot(CSquaredMode::Bound(m))
                }
                ProbMode::Schedule => {
                    let bounds = bounds
                        .clone()
                        .ok_or_else(|| HarnessError::config("algorithm.bounds", "required for mode schedule"))?;
                    ProbSettings::Schedule(
                        BoundSchedule::new(bounds).map_err(|e| HarnessError::config("algorithm.bounds", e))?,
                    )
                }
            };
            Ok(Algorithm::Prob(settings))
        }
        AlgorithmSpec::Det { theta_source, bits, epsilon, mode, fraction_bits, conjugation } => {
            let theta_source = match theta_source {
                ThetaSourceKind::ExactClassical => ThetaSource::ExactClassical,
                ThetaSourceKind::PhaseEstimation => {
                    qbayes_core::det::ancilla_count(*bits, *epsilon)
                        .map_err(|e| HarnessError::config("algorithm.bits", e))?;
                    ThetaSource::PhaseEstimation { bits: *bits, epsilon: *epsilon }
                }
            };
            if *fraction_bits == 0 || *fraction_bits > qbayes_core::models::MAX_FRACTION_BITS {
                return Err(HarnessError::config(
                    "algorithm.fraction_bits",
                    format!("{fraction_bits} outside 1..={}", qbayes_core::models::MAX_FRACTION_BITS),
                ));
            }
            if *conjugation == ConjugationOrder::AsPrinted && matches!(likelihood, LikelihoodSpec::Table { .. }) {
                return Err(HarnessError::config(
                    "algorithm.conjugation",
                    "as_printed needs a two_valued or elimination likelihood",
                ));
            }
            Ok(Algorithm::Det(DetSettings {
                theta_source,
                bits: *bits,
                epsilon: *epsilon,
                mode: *mode,
                fraction_bits: *fraction_bits,
                conjugation: *conjugation,
            }))
        }
    }
}
