//! Run reports and their JSON and CSV renderings.
//!
//! Everything under `deterministic` is a pure function of the configuration
//! and master seed; `timing` is the only part that varies between runs.

use std::io::Write;
use std::path::Path;

use qbayes_core::det::{AngleEstimate, FractionalPhases, IterationPlan, StageTrace};
use qbayes_core::models::{Decomposition, HypothesisSet};
use qbayes_core::prob::StageRecord;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const REPORT_SCHEMA: &str = "qbayes.report/1";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub deterministic: DeterministicSection,
    pub timing: Timing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeterministicSection {
    pub command: String,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub exact: ExactSection,
    pub oracle: OracleComparison,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled: Option<SampledSection>,
    pub checks: Vec<Check>,
    /// Per-trial, per-stage rows; rendered as CSV and omitted from JSON.
    #[serde(skip)]
    pub rows: Vec<TrialRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactSection {
    pub evidence: f64,
    pub max_likelihood: f64,
    /// Best single-copy success probability `P(d)/max P(d|h)`.
    pub bound: f64,
    /// Rotation angle of the prior for two-valued and elimination models.
    pub theta: Option<f64>,
    pub posterior: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prob: Option<ProbExact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub det: Option<DetExact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<PhaseExact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<Decomposition>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbExact {
    pub c_squares: Vec<f64>,
    pub stages: Vec<StageRecord>,
    pub cumulative_success: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DetExact {
    /// One rotation toward a two-valued or elimination posterior.
    Single {
        favored: HypothesisSet,
        plan: IterationPlan,
        full_iterations: u64,
        fractional: Option<FractionalPhases>,
        predicted_fidelity: f64,
        achieved_fidelity: f64,
        probabilities: Vec<f64>,
    },
    /// Staged update of a general likelihood table.
    General {
        fraction_bits: u32,
        stages: Vec<StageTrace>,
        final_fidelity: f64,
        total_variation: f64,
        probabilities: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseExact {
    pub bits: u32,
    pub epsilon: f64,
    pub ancillas: u32,
    pub delta: f64,
    /// Exact probability of each ancilla readout.
    pub distribution: Vec<f64>,
    /// Exact probability that the folded estimate misses by more than `delta`.
    pub failure_probability: f64,
}

/// The quantum result against the classical Bayes posterior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub fidelity: f64,
    pub total_variation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledSection {
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<SuccessStats>,
    /// Counts per ancilla readout or per measured hypothesis.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub histogram: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimates: Option<EstimateStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<FidelityStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessStats {
    pub successes: u64,
    pub frequency: f64,
    pub expected: f64,
    pub sigma: f64,
    /// Successes per stage, first stage first.
    pub by_stage: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateStats {
    pub true_theta: f64,
    pub misses: u64,
    pub miss_frequency: f64,
    pub miss_limit: f64,
    pub samples: Vec<AngleEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityStats {
    pub min: f64,
    pub mean: f64,
    /// Trials whose fidelity fell below their own predicted bound.
    pub violations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), passed, detail: detail.into() }
    }

    pub fn at_least(name: &str, value: f64, floor: f64) -> Self {
        Self::new(name, value >= floor, format!("{value:e} >= {floor:e}"))
    }

    pub fn at_most(name: &str, value: f64, ceiling: f64) -> Self {
        Self::new(name, value <= ceiling, format!("{value:e} <= {ceiling:e}"))
    }

    pub fn close(name: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        let gap = (value - expected).abs();
        Self::new(name, gap <= tolerance, format!("|{value:e} - {expected:e}| = {gap:e} <= {tolerance:e}"))
    }
}

/// One CSV line: a stage of a trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: u64,
    pub stage: usize,
    pub p_exact: Option<f64>,
    pub outcome: Option<u64>,
    pub fidelity: Option<f64>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.deterministic.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.deterministic.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite numbers and strings")
    }

    /// The reproducible part of the report, byte for byte.
    pub fn deterministic_json(&self) -> String {
        serde_json::to_string_pretty(&self.deterministic).expect("reports contain only finite numbers and strings")
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        if self.deterministic.rows.is_empty() {
            writer.write_record(["trial", "stage", "p_exact", "outcome", "fidelity"]).expect("in-memory write");
        }
        for row in &self.deterministic.rows {
            writer.serialize(row).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json() + "\n",
            Format::Csv => self.to_csv(),
        }
    }
}

/// Writes the report to `destination`, or to stdout when it is `None`.
pub fn emit_report(report: &RunReport, format: Format, destination: Option<&Path>) -> Result<()> {
    let text = report.render(format);
    match destination {
        Some(path) => std::fs::write(path, text)
            .map_err(|source| HarnessError::Io { context: format!("writing {}", path.display()), source }),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| HarnessError::Io { context: "writing to stdout".into(), source }),
    }
}
