//! Factoring a general likelihood into two-valued stages.
//!
//! The likelihood is rescaled to `L(h) = P(d|h) / min_support P(d|h) ≥ 1` and
//! `log₂ L(h)` is written in binary. Bit weight `k` (the digit worth `2^{-k}`,
//! with `k ≤ 0` for integer digits) turns into a two-valued stage that favors
//! the hypotheses whose digit is set, by the suppression `2^{2^{-k}}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::HypothesisSet;
use crate::error::{Error, Result};

pub const DEFAULT_FRACTION_BITS: u32 = 16;
pub const MAX_FRACTION_BITS: u32 = 40;

/// Snap window for `log₂ L(h)` against the nearest `K`-bit dyadic value.
const SNAP_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionStage {
    pub bit_weight: i32,
    pub favored: HypothesisSet,
    pub suppression: f64,
}

impl DecompositionStage {
    pub fn suppression_for(bit_weight: i32) -> f64 {
        2f64.powf(2f64.powi(-bit_weight))
    }
}

/// Full staged factorization: an optional leading elimination of the
/// zero-likelihood hypotheses, then the two-valued stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// Hypotheses kept by the elimination stage, when one is needed.
    pub elimination: Option<HypothesisSet>,
    pub stages: Vec<DecompositionStage>,
    pub fraction_bits: u32,
}

fn check_bits(fraction_bits: u32) -> Result<()> {
    if fraction_bits == 0 || fraction_bits > MAX_FRACTION_BITS {
        return Err(Error::InvalidParameter(format!("fraction bits {fraction_bits} outside 1..={MAX_FRACTION_BITS}")));
    }
    Ok(())
}

fn check_support(table: &[f64], support: &HypothesisSet) -> Result<()> {
    if support.is_empty() {
        return Err(Error::InvalidParameter("empty support".into()));
    }
    if let Some(&h) = support.iter().find(|&&h| h >= table.len()) {
        return Err(Error::InvalidLikelihood(format!("support entry {h} outside the table")));
    }
    if let Some(&h) = support.iter().find(|&&h| !(table[h].is_finite() && table[h] >= 0.0)) {
        return Err(Error::InvalidLikelihood(format!("P(d|h = {h}) = {} is not a probability", table[h])));
    }
    Ok(())
}

/// Two-valued stages whose product reproduces `L` on `support` to within a
/// factor `2^{2^{-K}}`. Requires `P(d|h) > 0` on the support.
pub fn decompose_general_model(
    table: &[f64],
    support: &HypothesisSet,
    fraction_bits: u32,
) -> Result<Vec<DecompositionStage>> {
    check_bits(fraction_bits)?;
    check_support(table, support)?;
    if let Some(&h) = support.iter().find(|&&h| table[h] == 0.0) {
        return Err(Error::ZeroLikelihood { h });
    }
    let min = support.iter().map(|&h| table[h]).fold(f64::INFINITY, f64::min);
    let scale = 2f64.powi(fraction_bits as i32);

    let mut by_weight: BTreeMap<i32, HypothesisSet> = BTreeMap::new();
    for &h in support {
        let digits = dyadic_digits(table[h] / min, scale);
        for bit in 0..u64::BITS {
            if (digits >> bit) & 1 == 1 {
                let weight = fraction_bits as i32 - bit as i32;
                by_weight.entry(weight).or_default().insert(h);
            }
        }
    }
    Ok(by_weight
        .into_iter()
        .filter(|(_, favored)| !favored.is_empty() && favored.len() < support.len())
        .map(|(bit_weight, favored)| DecompositionStage {
            bit_weight,
            favored,
            suppression: DecompositionStage::suppression_for(bit_weight),
        })
        .collect())
}

/// `⌊log₂(ratio) · 2^K⌋` as an integer, snapped to the nearest integer when
/// within the snap window so that dyadic ratios come out exact.
fn dyadic_digits(ratio: f64, scale: f64) -> u64 {
    let scaled = ratio.log2().max(0.0) * scale;
    let nearest = scaled.round();
    if (scaled - nearest).abs() <= SNAP_TOLERANCE * scale {
        nearest as u64
    } else {
        scaled.floor() as u64
    }
}

/// Splits off zero-likelihood hypotheses into an elimination stage, then
/// decomposes the rest.
pub fn decompose_likelihood(table: &[f64], support: &HypothesisSet, fraction_bits: u32) -> Result<Decomposition> {
    check_bits(fraction_bits)?;
    check_support(table, support)?;
    let consistent: HypothesisSet = support.iter().copied().filter(|&h| table[h] > 0.0).collect();
    if consistent.is_empty() {
        return Err(Error::ZeroEvidence);
    }
    let stages = decompose_general_model(table, &consistent, fraction_bits)?;
    let elimination = (consistent.len() < support.len()).then_some(consistent);
    Ok(Decomposition { elimination, stages, fraction_bits })
}

/// Pointwise product of stage suppressions over a space of `size` hypotheses.
pub fn reconstruct_likelihood(stages: &[DecompositionStage], size: usize) -> Vec<f64> {
    let mut table = vec![1.0; size];
    for stage in stages {
        for &h in stage.favored.iter().filter(|&&h| h < size) {
            table[h] *= stage.suppression;
        }
    }
    table
}
