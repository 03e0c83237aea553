//! Domain types: scenarios with exact oracles, propensity families and
//! PU datasets.

mod dataset;
mod propensity;
mod scenario;

pub use dataset::{DatasetMeta, ObservableView, PuDataset, Sample};
pub use propensity::{Linear, PropensitySpec};
pub use scenario::{
    standard_normal_sampler, DirectLaw, GaussianLaw, GaussianMixture, Law, PointFn, Propensity,
    Sampler, Scenario,
};
