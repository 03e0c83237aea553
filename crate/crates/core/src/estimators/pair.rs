use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::logistic::LogisticModel;
use crate::error::{PuError, Result};
use crate::model::{PointFn, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Prophet,
    /// Exact `y(x)` with a fitted `ŝ`.
    SemiProphetY,
    /// Fitted `ŷ` with exact `s(x)`.
    SemiProphetS,
    Fitted,
}

/// Which component a semi-prophet takes from the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Y,
    S,
}

/// A pair of probability functions `(ŷ(x), ŝ(x))` consumed by the rules.
/// Outputs are clamped to `[0, 1]`.
#[derive(Clone)]
pub struct EstimatorPair {
    y_hat: PointFn,
    s_hat: PointFn,
    provenance: Provenance,
}

impl fmt::Debug for EstimatorPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EstimatorPair")
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl EstimatorPair {
    pub fn new(y_hat: PointFn, s_hat: PointFn, provenance: Provenance) -> Self {
        Self {
            y_hat,
            s_hat,
            provenance,
        }
    }

    pub fn y(&self, x: &[f64]) -> f64 {
        (self.y_hat)(x).clamp(0.0, 1.0)
    }

    pub fn s(&self, x: &[f64]) -> f64 {
        (self.s_hat)(x).clamp(0.0, 1.0)
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
}

/// Exact `y(x)` and `s(x)` from the scenario.
pub fn prophet_pair(scenario: &Scenario) -> EstimatorPair {
    let (a, b) = (scenario.clone(), scenario.clone());
    EstimatorPair::new(
        Arc::new(move |x: &[f64]| a.oracles_unchecked(x).0),
        Arc::new(move |x: &[f64]| {
            let (y, e) = b.oracles_unchecked(x);
            e * y
        }),
        Provenance::Prophet,
    )
}

/// Replace one component of `fitted` with the scenario's exact oracle.
pub fn semi_prophet_pair(
    scenario: &Scenario,
    fitted: &EstimatorPair,
    replace: Component,
) -> EstimatorPair {
    let exact = prophet_pair(scenario);
    match replace {
        Component::Y => {
            EstimatorPair::new(exact.y_hat, fitted.s_hat.clone(), Provenance::SemiProphetY)
        }
        Component::S => {
            EstimatorPair::new(fitted.y_hat.clone(), exact.s_hat, Provenance::SemiProphetS)
        }
    }
}

/// Serializable fitted pair: a posterior model for `ŷ` and a separately
/// trained label model for `ŝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPair {
    pub posterior: LogisticModel,
    pub label_model: LogisticModel,
}

impl FittedPair {
    pub fn new(posterior: LogisticModel, label_model: LogisticModel) -> Result<Self> {
        if posterior.dims() != label_model.dims() {
            return Err(PuError::DimensionMismatch {
                expected: posterior.dims(),
                got: label_model.dims(),
            });
        }
        Ok(Self {
            posterior,
            label_model,
        })
    }

    pub fn dims(&self) -> usize {
        self.posterior.dims()
    }

    pub fn to_pair(&self) -> EstimatorPair {
        let y = self.posterior.clone();
        let s = self.label_model.clone();
        EstimatorPair::new(
            Arc::new(move |x: &[f64]| y.predict(x)),
            Arc::new(move |x: &[f64]| s.predict(x)),
            Provenance::Fitted,
        )
    }
}
