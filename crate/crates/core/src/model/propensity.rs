use serde::{Deserialize, Serialize};

use crate::error::{domain, PuError, Result};
use crate::math::{dot, sigmoid, softplus};

/// Coefficients of a linear score `γᵀx + r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub gamma: Vec<f64>,
    pub intercept: f64,
}

impl Linear {
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.gamma, x) + self.intercept
    }
}

/// Labeling probability among positives, `e(x) = P(S=1 | Y=1, X=x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PropensitySpec {
    /// `σ(γᵀx + r)`.
    LogisticLinear(Linear),
    /// `σ(γᵀx + r)^exponent`; large exponents approximate a step.
    Power { base: Linear, exponent: f64 },
    /// SCAR: `e(x) ≡ c`.
    Constant { c: f64 },
    /// `1{x[axis] > a}`.
    HardThreshold { a: f64, axis: usize },
}

impl PropensitySpec {
    pub fn validate(&self, dims: usize) -> Result<()> {
        let check_linear = |l: &Linear| -> Result<()> {
            if l.gamma.len() != dims {
                return Err(PuError::DimensionMismatch {
                    expected: dims,
                    got: l.gamma.len(),
                });
            }
            if !l.intercept.is_finite() || l.gamma.iter().any(|g| !g.is_finite()) {
                return Err(domain("propensity coefficients must be finite"));
            }
            Ok(())
        };
        match self {
            PropensitySpec::LogisticLinear(l) => check_linear(l),
            PropensitySpec::Power { base, exponent } => {
                if !(exponent.is_finite() && *exponent >= 1.0) {
                    return Err(domain(format!(
                        "power exponent must be >= 1, got {exponent}"
                    )));
                }
                check_linear(base)
            }
            PropensitySpec::Constant { c } => {
                if !(0.0..=1.0).contains(c) {
                    return Err(domain(format!(
                        "constant propensity must lie in [0,1], got {c}"
                    )));
                }
                Ok(())
            }
            PropensitySpec::HardThreshold { a, axis } => {
                if *axis >= dims {
                    return Err(domain(format!(
                        "threshold axis {axis} out of range for {dims} dims"
                    )));
                }
                if a.is_nan() {
                    return Err(domain("threshold must not be NaN"));
                }
                Ok(())
            }
        }
    }

    /// Evaluate `e(x)`; the caller guarantees `x` has the right length.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            PropensitySpec::LogisticLinear(l) => sigmoid(l.score(x)),
            // log σ(z) = -softplus(-z)
            PropensitySpec::Power { base, exponent } => {
                (-exponent * softplus(-base.score(x))).exp()
            }
            PropensitySpec::Constant { c } => *c,
            PropensitySpec::HardThreshold { a, axis } => {
                if x[*axis] > *a {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}
