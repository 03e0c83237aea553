//! Estimator pairs `(ŷ, ŝ)`: exact prophets and semi-prophets built from a
//! scenario, and logistic / EM models fit on the observable `(x, s)` view.

mod em;
mod logistic;
mod pair;

pub use em::{fit_em_pu, unlabeled_positive_weight, EmHyper, EmPuModel, CLAMP, MONOTONICITY_SLACK};
pub use logistic::{
    fit_logistic, fit_logistic_from, loss_and_gradient, LogisticHyper, LogisticModel,
};
pub use pair::{prophet_pair, semi_prophet_pair, Component, EstimatorPair, FittedPair, Provenance};

use crate::error::{PuError, Result};
use crate::model::ObservableView;

/// Logistic fit of S on X, used as `ŝ`.
pub fn fit_s_model(view: ObservableView<'_>, hyper: &LogisticHyper) -> Result<LogisticModel> {
    let labeled = view.n_labeled();
    if labeled == 0 || labeled == view.len() {
        return Err(PuError::DegenerateFit(format!(
            "label indicator is constant ({labeled} of {} labeled)",
            view.len()
        )));
    }
    let targets: Vec<f64> = view
        .labels()
        .iter()
        .map(|&s| if s { 1.0 } else { 0.0 })
        .collect();
    fit_logistic(&view.features(), &targets, &vec![1.0; view.len()], hyper)
}

/// EM posterior for `ŷ` plus a separate label model for `ŝ`.
pub fn fit_pair(
    view: ObservableView<'_>,
    em: &EmHyper,
    s_hyper: &LogisticHyper,
) -> Result<FittedPair> {
    let model = fit_em_pu(view, em)?;
    let s_model = fit_s_model(view, s_hyper)?;
    FittedPair::new(model.posterior_model, s_model)
}
