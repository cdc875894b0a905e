//! Classical probability layer: hypothesis spaces, priors, likelihood models
//! and the exact Bayes rule every quantum result is checked against.

mod decompose;

pub use decompose::{
    decompose_general_model, decompose_likelihood, reconstruct_likelihood, Decomposition, DecompositionStage,
    DEFAULT_FRACTION_BITS, MAX_FRACTION_BITS,
};

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `Σ P(h) = 1`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

pub type HypothesisSet = BTreeSet<usize>;

/// `H = {0, …, 2^n − 1}` for an `n`-qubit register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisSpace {
    qubits: usize,
}

impl HypothesisSpace {
    pub fn new(qubits: usize) -> Result<Self> {
        if qubits == 0 || qubits > crate::quantum::MAX_QUBITS {
            return Err(Error::InvalidParameter(format!(
                "register of {qubits} qubits outside 1..={}",
                crate::quantum::MAX_QUBITS
            )));
        }
        Ok(Self { qubits })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn size(&self) -> usize {
        1 << self.qubits
    }

    fn for_len(len: usize) -> Result<Self> {
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidPrior(format!("table length {len} is not a power of two ≥ 2")));
        }
        Self::new(len.trailing_zeros() as usize)
    }

    fn check_set(&self, set: &HypothesisSet) -> Result<()> {
        match set.iter().next_back() {
            Some(&h) if h >= self.size() => {
                Err(Error::InvalidLikelihood(format!("hypothesis {h} outside a space of size {}", self.size())))
            }
            _ => Ok(()),
        }
    }
}

/// Normalized probability table over a hypothesis space.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorDistribution {
    space: HypothesisSpace,
    probs: Vec<f64>,
}

impl PriorDistribution {
    /// Validates a table that already sums to one.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let space = HypothesisSpace::for_len(probs.len())?;
        check_weights(&probs)?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidPrior(format!("prior not normalized (sum = {sum})")));
        }
        Ok(Self { space, probs })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let space = HypothesisSpace::for_len(weights.len())?;
        check_weights(weights)?;
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidPrior("weights sum to zero".into()));
        }
        Ok(Self { space, probs: weights.iter().map(|w| w / sum).collect() })
    }

    pub fn uniform(space: HypothesisSpace) -> Self {
        let p = 1.0 / space.size() as f64;
        Self { space, probs: vec![p; space.size()] }
    }

    pub fn point_mass(space: HypothesisSpace, h: usize) -> Result<Self> {
        if h >= space.size() {
            return Err(Error::InvalidPrior(format!("point mass at {h} outside the space")));
        }
        let mut probs = vec![0.0; space.size()];
        probs[h] = 1.0;
        Ok(Self { space, probs })
    }

    /// `P(h) ∝ ratio^h`.
    pub fn geometric(space: HypothesisSpace, ratio: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::InvalidPrior(format!("geometric ratio {ratio} must be positive")));
        }
        let weights: Vec<f64> = (0..space.size()).map(|h| ratio.powi(h as i32)).collect();
        Self::from_weights(&weights)
    }

    /// Uniformly distributed point of the probability simplex.
    pub fn random<R: Rng + ?Sized>(space: HypothesisSpace, rng: &mut R) -> Self {
        let weights: Vec<f64> = (0..space.size()).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        Self::from_weights(&weights).expect("exponential weights are positive")
    }

    /// Prior read off a register state, `P(h) = |⟨h|ψ⟩|²`.
    pub fn from_state(state: &crate::quantum::StateVector) -> Result<Self> {
        Self::from_weights(&state.probabilities())
    }

    pub fn space(&self) -> HypothesisSpace {
        self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, h: usize) -> f64 {
        self.probs[h]
    }

    pub fn in_support(&self, h: usize) -> bool {
        self.probs[h] > 0.0
    }

    /// Hypotheses with nonzero prior probability.
    pub fn support(&self) -> HypothesisSet {
        (0..self.probs.len()).filter(|&h| self.in_support(h)).collect()
    }

    /// Total prior weight of `set`.
    pub fn mass(&self, set: &HypothesisSet) -> f64 {
        set.iter().filter(|&&h| h < self.probs.len()).map(|&h| self.probs[h]).sum()
    }

    /// Amplitude-encoding amplitudes `√P(h)`.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.sqrt()).collect()
    }

    /// Total-variation distance to `other`.
    pub fn total_variation(&self, other: &PriorDistribution) -> f64 {
        0.5 * self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

fn check_weights(values: &[f64]) -> Result<()> {
    match values.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
        Some(h) => Err(Error::InvalidPrior(format!("entry {h} = {} is not a probability", values[h]))),
        None => Ok(()),
    }
}

/// `P(d|h)` for the observed datum, as a function of `h`.
#[derive(Clone, Debug, PartialEq)]
pub enum LikelihoodModel {
    Table(Vec<f64>),
    /// `a1` on `favored`, `a2` elsewhere, with `a1 > a2 > 0`.
    TwoValued {
        favored: HypothesisSet,
        a1: f64,
        a2: f64,
    },
    /// `1/|consistent|` on `consistent`, zero elsewhere.
    Elimination {
        consistent: HypothesisSet,
    },
}

impl LikelihoodModel {
    pub fn table(values: Vec<f64>) -> Result<Self> {
        if let Some(h) = values.iter().position(|v| !(v.is_finite() && (0.0..=1.0).contains(v))) {
            return Err(Error::InvalidLikelihood(format!("P(d|h = {h}) = {} outside [0, 1]", values[h])));
        }
        Ok(LikelihoodModel::Table(values))
    }

    pub fn two_valued(favored: HypothesisSet, a1: f64, a2: f64) -> Result<Self> {
        if !(a1.is_finite() && a2.is_finite() && a1 <= 1.0 && a1 > a2 && a2 > 0.0) {
            return Err(Error::InvalidLikelihood(format!(
                "two-valued model needs 1 ≥ a1 > a2 > 0, got a1 = {a1}, a2 = {a2}"
            )));
        }
        Ok(LikelihoodModel::TwoValued { favored, a1, a2 })
    }

    /// Two-valued model with `a1 = 1` and `a2 = 1/r`; only `r` affects the
    /// posterior.
    pub fn with_suppression(favored: HypothesisSet, r: f64) -> Result<Self> {
        if r.is_infinite() && r > 0.0 {
            return Self::elimination(favored);
        }
        if !(r.is_finite() && r > 1.0) {
            return Err(Error::InvalidLikelihood(format!("suppression r = {r} must exceed 1")));
        }
        Self::two_valued(favored, 1.0, 1.0 / r)
    }

    pub fn elimination(consistent: HypothesisSet) -> Result<Self> {
        if consistent.is_empty() {
            return Err(Error::InvalidLikelihood("elimination model with no consistent hypothesis".into()));
        }
        Ok(LikelihoodModel::Elimination { consistent })
    }

    pub fn value(&self, h: usize) -> f64 {
        match self {
            LikelihoodModel::Table(values) => values[h],
            LikelihoodModel::TwoValued { favored, a1, a2 } => {
                if favored.contains(&h) {
                    *a1
                } else {
                    *a2
                }
            }
            LikelihoodModel::Elimination { consistent } => {
                if consistent.contains(&h) {
                    1.0 / consistent.len() as f64
                } else {
                    0.0
                }
            }
        }
    }

    /// Checks that the model is defined on every hypothesis of `space`.
    pub fn check_space(&self, space: HypothesisSpace) -> Result<()> {
        match self {
            LikelihoodModel::Table(values) if values.len() != space.size() => Err(Error::InvalidLikelihood(format!(
                "table has {} entries for a space of size {}",
                values.len(),
                space.size()
            ))),
            LikelihoodModel::Table(_) => Ok(()),
            LikelihoodModel::TwoValued { favored, .. } => space.check_set(favored),
            LikelihoodModel::Elimination { consistent } => space.check_set(consistent),
        }
    }

    /// Dense table view over `space`.
    pub fn to_table(&self, space: HypothesisSpace) -> Result<Vec<f64>> {
        self.check_space(space)?;
        Ok((0..space.size()).map(|h| self.value(h)).collect())
    }

    /// `r = a1/a2`; infinite for elimination, `None` for general tables.
    pub fn suppression(&self) -> Option<f64> {
        match self {
            LikelihoodModel::Table(_) => None,
            LikelihoodModel::TwoValued { a1, a2, .. } => Some(a1 / a2),
            LikelihoodModel::Elimination { .. } => Some(f64::INFINITY),
        }
    }

    pub fn favored(&self) -> Option<&HypothesisSet> {
        match self {
            LikelihoodModel::Table(_) => None,
            LikelihoodModel::TwoValued { favored, .. } => Some(favored),
            LikelihoodModel::Elimination { consistent } => Some(consistent),
        }
    }
}

/// Exact posterior together with the evidence `P(d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorResult {
    pub posterior: PriorDistribution,
    pub evidence: f64,
}

impl PosteriorResult {
    /// `Σ √P(h|d) |h⟩`.
    pub fn state(&self) -> crate::quantum::StateVector {
        crate::quantum::StateVector::from_real(&self.posterior.amplitudes()).expect("posterior is normalized")
    }
}

/// `P(d) = Σ_h P(h) P(d|h)`.
pub fn evidence(prior: &PriorDistribution, likelihood: &LikelihoodModel) -> Result<f64> {
    likelihood.check_space(prior.space())?;
    Ok(prior.probs().iter().enumerate().map(|(h, p)| p * likelihood.value(h)).sum())
}

/// Bayes rule, `P(h|d) = P(d|h)P(h) / P(d)`.
pub fn bayes_posterior(prior: &PriorDistribution, likelihood: &LikelihoodModel) -> Result<PosteriorResult> {
    let evidence = evidence(prior, likelihood)?;
    if evidence <= 0.0 {
        return Err(Error::ZeroEvidence);
    }
    let probs: Vec<f64> = prior.probs().iter().enumerate().map(|(h, p)| p * likelihood.value(h) / evidence).collect();
    let posterior = PriorDistribution::from_weights(&probs)?;
    Ok(PosteriorResult { posterior, evidence })
}

/// `max_{h ∈ support} P(d|h)`.
pub fn max_likelihood_over_support(prior: &PriorDistribution, likelihood: &LikelihoodModel) -> Result<f64> {
    likelihood.check_space(prior.space())?;
    Ok(prior.support().into_iter().map(|h| likelihood.value(h)).fold(0.0, f64::max))
}
