//! Plain reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

/// `2^{-t/2} Σ_k e^{2πi jk/2^t} |k⟩`, evaluated term by term.
pub fn dft_column(t: usize, j: usize) -> Vec<Complex64> {
    let n = 1usize << t;
    let scale = 1.0 / (n as f64).sqrt();
    (0..n).map(|k| Complex64::from_polar(scale, 2.0 * PI * ((j * k) % n) as f64 / n as f64)).collect()
}

/// Bayes rule on plain vectors.
pub fn posterior(prior: &[f64], likelihood: &[f64]) -> Vec<f64> {
    let joint: Vec<f64> = prior.iter().zip(likelihood).map(|(p, l)| p * l).collect();
    let evidence: f64 = joint.iter().sum();
    joint.iter().map(|j| j / evidence).collect()
}

pub fn evidence(prior: &[f64], likelihood: &[f64]) -> f64 {
    prior.iter().zip(likelihood).map(|(p, l)| p * l).sum()
}

pub fn max_on_support(prior: &[f64], likelihood: &[f64]) -> f64 {
    prior.iter().zip(likelihood).filter(|(p, _)| **p > 0.0).map(|(_, l)| *l).fold(0.0, f64::max)
}

/// `|Σ conj(a_h) √b_h|` for amplitudes `a` and probabilities `b`.
pub fn overlap_with_sqrt(amps: &[Complex64], probs: &[f64]) -> f64 {
    amps.iter().zip(probs).map(|(a, p)| a.conj() * p.sqrt()).sum::<Complex64>().norm()
}

/// Normalized table with a few exact zeros mixed in.
pub fn random_prior<R: Rng>(size: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..size).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen::<f64>() }).collect();
    if w.iter().all(|x| *x == 0.0) {
        w[0] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

pub fn random_likelihood<R: Rng>(size: usize, rng: &mut R) -> Vec<f64> {
    (0..size).map(|_| rng.gen::<f64>()).collect()
}

/// Standard error of a binomial frequency estimate.
pub fn binomial_sigma(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}
