//! Decision rules, risk analysis and synthetic benchmarks for augmented
//! positive-unlabeled (PU) prediction, where the label indicator `S` is
//! observed at prediction time as well as during training.
//!
//! * [`model`]: scenarios with exact `y(x)`, `e(x)`, `s(x)` oracles and PU datasets.
//! * [`rules`]: the feature-only and augmented Bayes rules and derived quantities.
//! * [`synth`]: the four Gaussian-mixture benchmark variants with calibrated propensity.
//! * [`risk`]: closed-form and Monte-Carlo Bayes risks, excess risk and its bounds.
//! * [`estimators`]: prophets, semi-prophets and fitted logistic / EM estimators.
//! * [`eval`]: U-metrics, the experiment grid and the binomial win test.

pub mod error;
pub mod estimators;
pub mod eval;
pub mod math;
pub mod model;
pub mod risk;
pub mod rng;
pub mod rules;
pub mod stats;
pub mod synth;

pub use error::{PuError, Result};
pub use model::{PuDataset, Scenario};
pub use rules::Decision;
pub use stats::Estimate;
