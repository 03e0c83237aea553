use serde::{Deserialize, Serialize};

use crate::error::{domain, PuError, Result};
use crate::math::{dot, sigmoid, softplus};

/// Optimizer settings for [`fit_logistic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticHyper {
    /// Ridge penalty `(l2/2)‖w‖²`; the bias is not penalized.
    pub l2: f64,
    pub max_iter: usize,
    /// Convergence threshold on the max-norm of the gradient.
    pub tol: f64,
}

impl Default for LogisticHyper {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

/// `x ↦ σ(wᵀx + b)`, with a record of how it was fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub hyper: LogisticHyper,
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every accepted step, starting at the initial point.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_trace: Vec<f64>,
}

impl LogisticModel {
    /// The constant model `σ(bias)`.
    pub fn constant(dims: usize, bias: f64) -> Self {
        Self {
            weights: vec![0.0; dims],
            bias,
            hyper: LogisticHyper::default(),
            final_loss: f64::NAN,
            iterations: 0,
            converged: false,
            loss_trace: Vec::new(),
        }
    }

    pub fn dims(&self) -> usize {
        self.weights.len()
    }

    pub fn linear(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear(x))
    }
}

/// Weighted cross-entropy `(1/n) Σ wᵢ [softplus(zᵢ) - tᵢ zᵢ] + (l2/2)‖w‖²`
/// and its gradient with respect to `(weights, bias)`.
pub fn loss_and_gradient<R: AsRef<[f64]>>(
    coef: &[f64],
    bias: f64,
    rows: &[R],
    targets: &[f64],
    sample_weights: &[f64],
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = rows.len() as f64;
    let mut grad = vec![0.0; coef.len()];
    let mut grad_b = 0.0;
    let mut loss = 0.0;
    for ((row, &t), &w) in rows.iter().zip(targets).zip(sample_weights) {
        let x = row.as_ref();
        let z = dot(coef, x) + bias;
        loss += w * (softplus(z) - t * z);
        let r = w * (sigmoid(z) - t);
        grad.iter_mut().zip(x).for_each(|(g, xi)| *g += r * xi);
        grad_b += r;
    }
    let penalty: f64 = coef.iter().map(|c| c * c).sum::<f64>() * l2 / 2.0;
    grad.iter_mut()
        .zip(coef)
        .for_each(|(g, c)| *g = *g / n + l2 * c);
    (loss / n + penalty, grad, grad_b / n)
}

fn loss_only<R: AsRef<[f64]>>(
    coef: &[f64],
    bias: f64,
    rows: &[R],
    t: &[f64],
    w: &[f64],
    l2: f64,
) -> f64 {
    let data: f64 = rows
        .iter()
        .zip(t)
        .zip(w)
        .map(|((row, &t), &w)| {
            let z = dot(coef, row.as_ref()) + bias;
            w * (softplus(z) - t * z)
        })
        .sum();
    data / rows.len() as f64 + coef.iter().map(|c| c * c).sum::<f64>() * l2 / 2.0
}

fn validate<R: AsRef<[f64]>>(
    rows: &[R],
    targets: &[f64],
    weights: &[f64],
    hyper: &LogisticHyper,
) -> Result<usize> {
    if rows.is_empty() {
        return Err(domain("logistic fit needs at least one row"));
    }
    if targets.len() != rows.len() || weights.len() != rows.len() {
        return Err(PuError::DimensionMismatch {
            expected: rows.len(),
            got: if targets.len() != rows.len() {
                targets.len()
            } else {
                weights.len()
            },
        });
    }
    let dims = rows[0].as_ref().len();
    for r in rows {
        let r = r.as_ref();
        if r.len() != dims {
            return Err(PuError::DimensionMismatch {
                expected: dims,
                got: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(domain("features must be finite"));
        }
    }
    if targets.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(domain("targets must lie in [0,1]"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(domain("sample weights must be finite and nonnegative"));
    }
    if !(hyper.l2 >= 0.0 && hyper.l2.is_finite()) {
        return Err(domain(format!("l2 must be nonnegative, got {}", hyper.l2)));
    }
    Ok(dims)
}

/// Fit from the zero vector.
pub fn fit_logistic<R: AsRef<[f64]>>(
    rows: &[R],
    targets: &[f64],
    weights: &[f64],
    hyper: &LogisticHyper,
) -> Result<LogisticModel> {
    fit_logistic_from(rows, targets, weights, hyper, None)
}

/// Damped Newton with Armijo backtracking, optionally warm-started from
/// `init`. Falls back to the gradient direction when the Hessian is not
/// numerically positive definite. Hitting `max_iter` is reported through
/// `converged = false`, not as an error.
pub fn fit_logistic_from<R: AsRef<[f64]>>(
    rows: &[R],
    targets: &[f64],
    weights: &[f64],
    hyper: &LogisticHyper,
    init: Option<&LogisticModel>,
) -> Result<LogisticModel> {
    let dims = validate(rows, targets, weights, hyper)?;
    let (mut coef, mut bias) = match init {
        Some(m) if m.dims() == dims => (m.weights.clone(), m.bias),
        Some(m) => {
            return Err(PuError::DimensionMismatch {
                expected: dims,
                got: m.dims(),
            })
        }
        None => (vec![0.0; dims], 0.0),
    };
    let l2 = hyper.l2;
    let (mut loss, mut grad, mut grad_b) =
        loss_and_gradient(&coef, bias, rows, targets, weights, l2);
    let mut trace = vec![loss];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < hyper.max_iter {
        let gmax = grad.iter().fold(grad_b.abs(), |m, g| m.max(g.abs()));
        if gmax <= hyper.tol {
            converged = true;
            break;
        }
        let mut g_full = grad.clone();
        g_full.push(grad_b);
        let hess = hessian(&coef, bias, rows, weights, l2);
        let dir = cholesky_solve(hess, &g_full).unwrap_or_else(|| g_full.clone());
        let slope: f64 = dir.iter().zip(&g_full).map(|(d, g)| d * g).sum();
        let (dir, slope) = if slope > 0.0 {
            (dir, slope)
        } else {
            (g_full.clone(), dot(&g_full, &g_full))
        };
        if slope <= 16.0 * f64::EPSILON * loss.abs().max(1.0) {
            // The predicted decrease is below the loss resolution, so a line
            // search cannot tell steps apart. Take the full step only if it
            // shrinks the gradient without raising the loss.
            let trial: Vec<f64> = coef.iter().zip(&dir).map(|(c, d)| c - d).collect();
            let trial_b = bias - dir[dims];
            let (t_loss, t_grad, t_grad_b) =
                loss_and_gradient(&trial, trial_b, rows, targets, weights, l2);
            let t_max = t_grad.iter().fold(t_grad_b.abs(), |m, g| m.max(g.abs()));
            if t_loss <= loss && t_max < gmax {
                (coef, bias, loss, grad, grad_b) = (trial, trial_b, t_loss, t_grad, t_grad_b);
                trace.push(loss);
                iterations += 1;
                continue;
            }
            converged = true;
            break;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = coef.iter().zip(&dir).map(|(c, d)| c - step * d).collect();
            let trial_b = bias - step * dir[dims];
            let trial_loss = loss_only(&trial, trial_b, rows, targets, weights, l2);
            if trial_loss <= loss - 1e-4 * step * slope {
                accepted = Some((trial, trial_b));
                break;
            }
            step *= 0.5;
        }
        let Some((c, b)) = accepted else {
            // No representable descent: the optimum is reached to machine precision.
            converged = true;
            break;
        };
        coef = c;
        bias = b;
        (loss, grad, grad_b) = loss_and_gradient(&coef, bias, rows, targets, weights, l2);
        trace.push(loss);
        iterations += 1;
    }
    if !converged {
        let gmax = grad.iter().fold(grad_b.abs(), |m, g| m.max(g.abs()));
        converged = gmax <= hyper.tol;
    }
    Ok(LogisticModel {
        weights: coef,
        bias,
        hyper: *hyper,
        final_loss: loss,
        iterations,
        converged,
        loss_trace: trace,
    })
}

/// Hessian over `(weights, bias)`, bias last, row-major.
fn hessian<R: AsRef<[f64]>>(
    coef: &[f64],
    bias: f64,
    rows: &[R],
    sample_weights: &[f64],
    l2: f64,
) -> Vec<Vec<f64>> {
    let d = coef.len() + 1;
    let n = rows.len() as f64;
    let mut h = vec![vec![0.0; d]; d];
    let mut xa = vec![1.0; d];
    for (row, &w) in rows.iter().zip(sample_weights) {
        let x = row.as_ref();
        let p = sigmoid(dot(coef, x) + bias);
        let r = w * p * (1.0 - p);
        if r == 0.0 {
            continue;
        }
        xa[..d - 1].copy_from_slice(x);
        for i in 0..d {
            let ri = r * xa[i];
            for j in 0..=i {
                h[i][j] += ri * xa[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            h[i][j] /= n;
            h[j][i] = h[i][j];
        }
        if i + 1 < d {
            h[i][i] += l2;
        }
    }
    h
}

/// Solve `A x = b` for symmetric positive definite `A`; `None` if a pivot
/// is not comfortably positive.
fn cholesky_solve(mut a: Vec<Vec<f64>>, b: &[f64]) -> Option<Vec<f64>> {
    let d = b.len();
    let scale = (0..d).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    for j in 0..d {
        let mut diag = a[j][j];
        for k in 0..j {
            diag -= a[j][k] * a[j][k];
        }
        if !(diag > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
            return None;
        }
        let l = diag.sqrt();
        a[j][j] = l;
        for i in j + 1..d {
            let mut v = a[i][j];
            for k in 0..j {
                v -= a[i][k] * a[j][k];
            }
            a[i][j] = v / l;
        }
    }
    let mut y = b.to_vec();
    for i in 0..d {
        for k in 0..i {
            y[i] -= a[i][k] * y[k];
        }
        y[i] /= a[i][i];
    }
    for i in (0..d).rev() {
        for k in i + 1..d {
            y[i] -= a[k][i] * y[k];
        }
        y[i] /= a[i][i];
    }
    Some(y)
}
