//! Phases for a partial final rotation.
//!
//! Inside the plane spanned by the favored and disfavored parts of the prior
//! state `ψ = (sin(ϑ/2), cos(ϑ/2))`, the generalized operator is
//! `M(φ, χ) = (e^{iχ} I + (1 − e^{iχ}) ψψᵀ) · diag(e^{iφ}, 1)`.
//! Given the current real state at angle `γ`, we look for `(φ, χ)` that land
//! on the target angle up to a global phase.

use std::f64::consts::PI;

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::plan::half_angle;
use crate::error::{Error, Result};

/// Required overlap `|⟨target|M(φ, χ)|current⟩|` of a solved step.
pub const FRACTIONAL_OVERLAP_TARGET: f64 = 1.0 - 1e-9;

const GRID_STEPS: usize = 48;
const RESTARTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalPhases {
    pub marked_phase: f64,
    pub zero_phase: f64,
    /// Overlap reached in the two-dimensional model.
    pub overlap: f64,
}

/// Applies `M(φ, χ)` to the plane vector `state`.
pub fn plane_step(theta: f64, marked_phase: f64, zero_phase: f64, state: [Complex64; 2]) -> [Complex64; 2] {
    let (s, c) = half_angle(theta);
    let u = [state[0] * Complex64::from_polar(1.0, marked_phase), state[1]];
    let e = Complex64::from_polar(1.0, zero_phase);
    let projection = u[0] * s + u[1] * c;
    let k = (Complex64::new(1.0, 0.0) - e) * projection;
    [e * u[0] + k * s, e * u[1] + k * c]
}

fn plane_vector(angle: f64) -> [Complex64; 2] {
    let (s, c) = half_angle(angle);
    [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]
}

#[derive(Clone)]
struct Mismatch {
    theta: f64,
    current: [Complex64; 2],
    target: [Complex64; 2],
}

impl Mismatch {
    fn overlap(&self, marked_phase: f64, zero_phase: f64) -> f64 {
        let out = plane_step(self.theta, marked_phase, zero_phase, self.current);
        (self.target[0].conj() * out[0] + self.target[1].conj() * out[1]).norm()
    }
}

impl CostFunction for Mismatch {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let o = self.overlap(p[0], p[1]);
        Ok(1.0 - o * o)
    }
}

/// Solves for the phases taking the plane state at angle `current_angle`
/// (that is, `sin(γ)|α⟩ + cos(γ)|β⟩` with `γ = current_angle/2`) to the
/// state at `target_angle`.
pub fn solve_fractional_phases(theta: f64, current_angle: f64, target_angle: f64) -> Result<FractionalPhases> {
    let problem = Mismatch { theta, current: plane_vector(current_angle), target: plane_vector(target_angle) };

    let step = 2.0 * PI / GRID_STEPS as f64;
    let mut grid = Vec::with_capacity(GRID_STEPS * GRID_STEPS);
    for i in 0..GRID_STEPS {
        for j in 0..GRID_STEPS {
            let (phi, chi) = (-PI + step * (i as f64 + 0.5), -PI + step * (j as f64 + 0.5));
            grid.push((1.0 - problem.overlap(phi, chi).powi(2), phi, chi));
        }
    }
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best = FractionalPhases {
        marked_phase: grid[0].1,
        zero_phase: grid[0].2,
        overlap: problem.overlap(grid[0].1, grid[0].2),
    };
    for &(_, phi, chi) in grid.iter().take(RESTARTS) {
        let simplex = vec![vec![phi, chi], vec![phi + step, chi], vec![phi, chi + step]];
        let solver =
            NelderMead::new(simplex).with_sd_tolerance(1e-16).map_err(|e| Error::NumericalContract(e.to_string()))?;
        let run = Executor::new(problem.clone(), solver)
            .configure(|s| s.max_iters(2000))
            .run()
            .map_err(|e| Error::NumericalContract(e.to_string()))?;
        if let Some(p) = run.state().get_best_param() {
            let overlap = problem.overlap(p[0], p[1]);
            if overlap > best.overlap {
                best = FractionalPhases { marked_phase: wrap(p[0]), zero_phase: wrap(p[1]), overlap };
            }
        }
        if best.overlap >= 1.0 - 1e-14 {
            break;
        }
    }
    if best.overlap < FRACTIONAL_OVERLAP_TARGET {
        return Err(Error::NumericalContract(format!(
            "fractional step reached overlap {} (ϑ = {theta}, from {current_angle} to {target_angle})",
            best.overlap
        )));
    }
    Ok(best)
}

/// Maps an angle into `(−π, π]`.
fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}
