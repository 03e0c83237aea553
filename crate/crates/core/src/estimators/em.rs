use serde::{Deserialize, Serialize};

use super::logistic::{fit_logistic, fit_logistic_from, LogisticHyper, LogisticModel};
use crate::error::{PuError, Result};
use crate::math::logit;
use crate::model::ObservableView;

/// Probabilities are clamped to `[CLAMP, 1 - CLAMP]` inside likelihoods.
pub const CLAMP: f64 = 1e-6;
/// Largest tolerated decrease of the EM objective between iterations.
pub const MONOTONICITY_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmHyper {
    pub l2_y: f64,
    pub l2_e: f64,
    pub em_iters: usize,
    /// Iterations of the initial pass with the propensity frozen at 1/2.
    #[serde(default = "default_init_iters")]
    pub init_iters: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EmHyper {
    fn default() -> Self {
        Self {
            l2_y: 1e-3,
            l2_e: 1e-3,
            em_iters: 30,
            init_iters: default_init_iters(),
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

fn default_init_iters() -> usize {
    10
}

impl EmHyper {
    fn posterior_hyper(&self) -> LogisticHyper {
        LogisticHyper {
            l2: self.l2_y,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }

    fn propensity_hyper(&self) -> LogisticHyper {
        LogisticHyper {
            l2: self.l2_e,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

/// Joint SAR model: `ŷ(x)` and `ê(x)` both logistic, `ŝ = ê·ŷ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmPuModel {
    pub posterior_model: LogisticModel,
    pub propensity_model: LogisticModel,
    /// Observed-data log-likelihood `Σ_{s=1} log ŷê + Σ_{s=0} log(1 - ŷê)`,
    /// at initialization and after every iteration.
    pub log_likelihood_trace: Vec<f64>,
    /// The log-likelihood minus both ridge penalties (scaled to sums);
    /// this is the quantity EM is guaranteed not to decrease.
    pub objective_trace: Vec<f64>,
}

impl EmPuModel {
    pub fn y_hat(&self, x: &[f64]) -> f64 {
        self.posterior_model.predict(x)
    }

    pub fn e_hat(&self, x: &[f64]) -> f64 {
        self.propensity_model.predict(x)
    }

    pub fn s_hat(&self, x: &[f64]) -> f64 {
        self.e_hat(x) * self.y_hat(x)
    }
}

fn log_likelihood(rows: &[&[f64]], labels: &[bool], y: &LogisticModel, e: &LogisticModel) -> f64 {
    rows.iter()
        .zip(labels)
        .map(|(x, &s)| {
            let p = (y.predict(x) * e.predict(x)).clamp(CLAMP, 1.0 - CLAMP);
            if s {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum()
}

fn penalty(m: &LogisticModel, l2: f64, n: usize) -> f64 {
    n as f64 * l2 / 2.0 * m.weights.iter().map(|w| w * w).sum::<f64>()
}

/// Posterior of `Y = 1` for an unlabeled record: `ŷ(1 - ê)/(1 - ŷê)`.
pub fn unlabeled_positive_weight(y: f64, e: f64) -> f64 {
    let denom = 1.0 - y * e;
    if denom <= 0.0 {
        0.0
    } else {
        (y * (1.0 - e) / denom).clamp(0.0, 1.0)
    }
}

fn flatten(y: &LogisticModel, e: &LogisticModel) -> Vec<f64> {
    let mut v = y.weights.clone();
    v.push(y.bias);
    v.extend_from_slice(&e.weights);
    v.push(e.bias);
    v
}

fn unflatten(
    theta: &[f64],
    template_y: &LogisticModel,
    template_e: &LogisticModel,
) -> (LogisticModel, LogisticModel) {
    let d = template_y.dims();
    let mut y = template_y.clone();
    let mut e = template_e.clone();
    y.weights.copy_from_slice(&theta[..d]);
    y.bias = theta[d];
    e.weights.copy_from_slice(&theta[d + 1..2 * d + 1]);
    e.bias = theta[2 * d + 1];
    (y, e)
}

struct Problem<'a> {
    rows: Vec<&'a [f64]>,
    labels: Vec<bool>,
    s_targets: Vec<f64>,
    ones: Vec<f64>,
    hyper: EmHyper,
}

impl Problem<'_> {
    /// One E-step followed by the M-steps, each warm-started from the input.
    /// With `update_e` off the propensity model is held fixed.
    fn em_map(
        &self,
        y: &LogisticModel,
        e: &LogisticModel,
        update_e: bool,
    ) -> Result<(LogisticModel, LogisticModel)> {
        let q: Vec<f64> = self
            .rows
            .iter()
            .zip(&self.labels)
            .map(|(x, &s)| {
                if s {
                    1.0
                } else {
                    unlabeled_positive_weight(y.predict(x), e.predict(x))
                }
            })
            .collect();
        let y_new = fit_logistic_from(
            &self.rows,
            &q,
            &self.ones,
            &self.hyper.posterior_hyper(),
            Some(y),
        )?;
        let e_new = if update_e {
            fit_logistic_from(
                &self.rows,
                &self.s_targets,
                &q,
                &self.hyper.propensity_hyper(),
                Some(e),
            )?
        } else {
            e.clone()
        };
        Ok((y_new, e_new))
    }

    fn evaluate(&self, y: &LogisticModel, e: &LogisticModel) -> (f64, f64) {
        let n = self.rows.len();
        let ll = log_likelihood(&self.rows, &self.labels, y, e);
        (
            ll,
            ll - penalty(y, self.hyper.l2_y, n) - penalty(e, self.hyper.l2_e, n),
        )
    }

    /// `iterations` accelerated EM steps from `(posterior, propensity)`,
    /// appending the log-likelihood and objective after each to the traces.
    fn run(
        &self,
        mut posterior: LogisticModel,
        mut propensity: LogisticModel,
        iterations: usize,
        update_e: bool,
        ll_trace: &mut Vec<f64>,
        obj_trace: &mut Vec<f64>,
    ) -> Result<(LogisticModel, LogisticModel)> {
        for iteration in 1..=iterations {
            let (y1, e1) = self.em_map(&posterior, &propensity, update_e)?;
            let (y2, e2) = self.em_map(&y1, &e1, update_e)?;
            let t0 = flatten(&posterior, &propensity);
            let t1 = flatten(&y1, &e1);
            let t2 = flatten(&y2, &e2);
            let r: Vec<f64> = t1.iter().zip(&t0).map(|(a, b)| a - b).collect();
            let v: Vec<f64> = t2
                .iter()
                .zip(&t1)
                .zip(&r)
                .map(|((a, b), r)| a - b - r)
                .collect();
            let (r_norm, v_norm) = (norm(&r), norm(&v));

            let plain = self.evaluate(&y2, &e2);
            let mut next = (y2, e2, plain);
            if v_norm > 0.0 && r_norm > 0.0 {
                let alpha = (-r_norm / v_norm).min(-1.0);
                let t_ext: Vec<f64> = t0
                    .iter()
                    .zip(&r)
                    .zip(&v)
                    .map(|((t, r), v)| t - 2.0 * alpha * r + alpha * alpha * v)
                    .collect();
                if t_ext.iter().all(|t| t.is_finite()) {
                    let (ye, ee) = unflatten(&t_ext, &next.0, &next.1);
                    let (ya, ea) = self.em_map(&ye, &ee, update_e)?;
                    let accelerated = self.evaluate(&ya, &ea);
                    if accelerated.1 >= next.2 .1 {
                        next = (ya, ea, accelerated);
                    }
                }
            }
            let (y_new, e_new, (ll, obj)) = next;
            let previous = self.evaluate(&posterior, &propensity).1;
            if obj < previous - MONOTONICITY_SLACK {
                return Err(PuError::MonotonicityViolation {
                    iteration,
                    previous,
                    current: obj,
                });
            }
            posterior = y_new;
            propensity = e_new;
            ll_trace.push(ll);
            obj_trace.push(obj);
        }
        Ok((posterior, propensity))
    }
}

/// EM for the SAR model, accelerated by squared extrapolation (SQUAREM).
///
/// Initialization: `ŷ` starts from a logistic fit of S on X and is refined
/// for `init_iters` iterations with `ê` frozen at 1/2; `ê` then starts at
/// the constant `ĉ₀ = #labeled / Σ ŷ(xᵢ)`. The E-step assigns labeled
/// records `Y = 1` and unlabeled ones the weight
/// [`unlabeled_positive_weight`]; the M-steps refit `ŷ` on those soft
/// targets and `ê` on S weighted by them, warm-started from the current
/// iterate. Each iteration takes two such steps, extrapolates along them
/// and keeps the extrapolated point only if it does not lower the
/// penalized objective, so the objective cannot decrease.
pub fn fit_em_pu(view: ObservableView<'_>, hyper: &EmHyper) -> Result<EmPuModel> {
    let n = view.len();
    if view.n_labeled() == 0 {
        return Err(PuError::DegenerateFit(
            "EM needs at least one labeled record".into(),
        ));
    }
    let labels = view.labels();
    let problem = Problem {
        rows: view.features(),
        s_targets: labels.iter().map(|&s| if s { 1.0 } else { 0.0 }).collect(),
        labels,
        ones: vec![1.0; n],
        hyper: *hyper,
    };

    let posterior = fit_logistic(
        &problem.rows,
        &problem.s_targets,
        &problem.ones,
        &hyper.posterior_hyper(),
    )?;
    let mut propensity = LogisticModel::constant(view.dims(), 0.0);
    propensity.hyper = hyper.propensity_hyper();

    let (posterior, propensity) = problem.run(
        posterior,
        propensity,
        hyper.init_iters,
        false,
        &mut Vec::new(),
        &mut Vec::new(),
    )?;
    let estimated_positives = problem
        .rows
        .iter()
        .map(|x| posterior.predict(x))
        .sum::<f64>()
        .max(1.0);
    let c0 = (view.n_labeled() as f64 / estimated_positives).clamp(CLAMP, 1.0 - CLAMP);
    let mut propensity = LogisticModel {
        bias: logit(c0),
        ..propensity
    };
    propensity.weights.iter_mut().for_each(|w| *w = 0.0);

    let (ll, obj) = problem.evaluate(&posterior, &propensity);
    let mut ll_trace = vec![ll];
    let mut obj_trace = vec![obj];
    let (posterior, propensity) = problem.run(
        posterior,
        propensity,
        hyper.em_iters,
        true,
        &mut ll_trace,
        &mut obj_trace,
    )?;
    Ok(EmPuModel {
        posterior_model: posterior,
        propensity_model: propensity,
        log_likelihood_trace: ll_trace,
        objective_trace: obj_trace,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
