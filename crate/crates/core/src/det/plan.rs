use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance from an integer below which an iteration count is treated as
/// whole, so that no fractional step is appended for rounding noise.
const WHOLE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    /// Round `T` half up and accept the leftover angle.
    ClosestInteger,
    /// `⌊T⌋` full iterations plus one step with reduced phases.
    #[default]
    FractionalFinal,
}

/// How many applications of the rotation take the prior to the posterior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationPlan {
    pub theta: f64,
    #[serde(with = "extended_real")]
    pub suppression: f64,
    pub theta_prime: f64,
    pub iterations: f64,
    pub mode: PlanMode,
}

/// `(sin(x/2), cos(x/2))` with the endpoints `x = 0` and `x = π` exact.
pub(crate) fn half_angle(x: f64) -> (f64, f64) {
    if x == PI {
        (1.0, 0.0)
    } else if x == 0.0 {
        (0.0, 1.0)
    } else {
        (x / 2.0).sin_cos()
    }
}

/// Target angle `ϑ′` of the posterior for suppression `r`; `r = ∞` gives `π`.
pub fn target_angle(theta: f64, suppression: f64) -> f64 {
    if suppression == f64::INFINITY {
        return PI;
    }
    let (s, c) = half_angle(theta);
    2.0 * (suppression.sqrt() * s).atan2(c)
}

pub fn iteration_plan(theta: f64, suppression: f64) -> Result<IterationPlan> {
    if theta == 0.0 {
        return Err(Error::DegenerateAngle);
    }
    if !(theta.is_finite() && theta > 0.0 && theta <= PI) {
        return Err(Error::InvalidParameter(format!("rotation angle {theta} outside (0, π]")));
    }
    if suppression.is_nan() || suppression < 1.0 {
        return Err(Error::InvalidParameter(format!("suppression {suppression} must be at least 1")));
    }
    let theta_prime = target_angle(theta, suppression);
    let iterations = ((theta_prime / theta - 1.0) / 2.0).max(0.0);
    Ok(IterationPlan { theta, suppression, theta_prime, iterations, mode: PlanMode::default() })
}

impl IterationPlan {
    pub fn with_mode(mut self, mode: PlanMode) -> Self {
        self.mode = mode;
        self
    }

    fn whole(&self) -> Option<u64> {
        let nearest = self.iterations.round();
        ((self.iterations - nearest).abs() <= WHOLE_TOLERANCE).then_some(nearest as u64)
    }

    /// Number of standard (phase `π`) applications.
    pub fn full_iterations(&self) -> u64 {
        if let Some(n) = self.whole() {
            return n;
        }
        match self.mode {
            PlanMode::ClosestInteger => (self.iterations + 0.5).floor() as u64,
            PlanMode::FractionalFinal => self.iterations.floor() as u64,
        }
    }

    pub fn needs_fractional_step(&self) -> bool {
        self.mode == PlanMode::FractionalFinal && self.whole().is_none()
    }

    /// Overlap with the target the plan promises under its own angle:
    /// `|cos((2T̃+1)ϑ/2 − ϑ′/2)|`, or 1 when the fractional step closes the gap.
    pub fn predicted_fidelity(&self) -> f64 {
        if self.needs_fractional_step() {
            return 1.0;
        }
        let reached = (2 * self.full_iterations() + 1) as f64 * self.theta / 2.0;
        (reached - self.theta_prime / 2.0).cos().abs()
    }
}

/// `r = ∞` is written as the string `"inf"`, which JSON numbers cannot hold.
pub mod extended_real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *value == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*value)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(x) => Ok(x),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}
