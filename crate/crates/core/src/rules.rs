//! Decision rules for augmented PU prediction and the probability
//! quantities they are built from.
//!
//! All thresholds are strict: a value exactly on a threshold decides 0.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A binary class decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Decision {
    Negative,
    Positive,
}

impl Decision {
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Decision::Positive
        } else {
            Decision::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == Decision::Positive
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(domain(format!("{name} must lie in [0,1], got {v}")));
    }
    Ok(())
}

fn check_pair(y: f64, s: f64) -> Result<()> {
    check_unit("y", y)?;
    check_unit("s", s)?;
    if s > y {
        return Err(domain(format!("s <= y violated: s={s} > y={y}")));
    }
    Ok(())
}

/// `ỹ(x,0) = (y - s)/(1 - s)`, the posterior of Y=1 within the unlabeled stratum.
pub fn tilde_y(y: f64, s: f64) -> Result<f64> {
    check_pair(y, s)?;
    if s >= 1.0 {
        return Err(domain(format!("s < 1 violated: s={s}")));
    }
    Ok(((y - s) / (1.0 - s)).clamp(0.0, 1.0))
}

/// Feature-only Bayes rule: positive iff `y > 1/2`.
pub fn decide_db(y: f64) -> Decision {
    Decision::from_bool(y > 0.5)
}

/// Augmented Bayes rule. Labeled records are positive; an unlabeled record
/// is positive iff `y > (1 + s)/2`.
pub fn decide_db_pu(y: f64, s_prob: f64, s_label: bool) -> Result<Decision> {
    if s_label {
        return Ok(Decision::Positive);
    }
    check_pair(y, s_prob)?;
    if s_prob >= 1.0 {
        return Err(domain(format!("s < 1 violated: s={s_prob}")));
    }
    Ok(Decision::from_bool(y > (1.0 + s_prob) / 2.0))
}

/// [`decide_db_pu`] for estimated probabilities, which need not satisfy
/// `ŝ ≤ ŷ`. `ŝ` is capped at `ŷ`; the decision is then negative because
/// `(1 + ŷ)/2 ≥ ŷ`.
pub fn decide_db_pu_estimated(y_hat: f64, s_hat: f64, s_label: bool) -> Decision {
    if s_label {
        return Decision::Positive;
    }
    let y = y_hat.clamp(0.0, 1.0);
    let s = s_hat.clamp(0.0, y);
    Decision::from_bool(y > (1.0 + s) / 2.0)
}

/// Threshold on `y` equivalent to the augmented rule under constant propensity `c`.
pub fn scar_threshold(c: f64) -> Result<f64> {
    check_unit("c", c)?;
    Ok(1.0 / (2.0 - c))
}

/// Threshold on `y` for the S=0 stratum under a strictly proper composite
/// loss whose Bayes link satisfies `φ⁻¹(1) = phi_inv_at_1`.
pub fn generalized_threshold(phi_inv_at_1: f64, s_prob: f64) -> Result<f64> {
    if !(phi_inv_at_1 > 0.0 && phi_inv_at_1.is_finite()) {
        return Err(domain(format!(
            "phi_inv_at_1 must be positive, got {phi_inv_at_1}"
        )));
    }
    check_unit("s", s_prob)?;
    Ok((phi_inv_at_1 + s_prob) / (1.0 + phi_inv_at_1))
}

/// Ratio of the odds of Y=1 in the unlabeled stratum to the population odds.
pub fn odds_ratio(e: f64) -> Result<f64> {
    check_unit("e", e)?;
    Ok(1.0 - e)
}

/// The same odds ratio computed from `(y, s)` as `(y - s)/y`.
pub fn odds_ratio_from(y: f64, s: f64) -> Result<f64> {
    check_pair(y, s)?;
    if y == 0.0 {
        return Err(domain("odds ratio undefined at y = 0"));
    }
    Ok((y - s) / y)
}

/// Likely-positive score `(y - s)/(1 - y)` for unlabeled records;
/// `+inf` at `y = 1`. A score above 1 is exactly the augmented rule's
/// positive region.
pub fn likely_positive_score(y: f64, s: f64) -> Result<f64> {
    check_pair(y, s)?;
    if y == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok((y - s) / (1.0 - y))
}

/// Ids of the `k` highest scores, descending; ties go to the smaller id.
pub fn rank_top_k(pairs: &[(u64, f64, f64)], k: usize) -> Result<Vec<u64>> {
    if k > pairs.len() {
        return Err(domain(format!(
            "k={k} exceeds the {} candidates",
            pairs.len()
        )));
    }
    let mut scored = pairs
        .iter()
        .map(|&(id, y, s)| likely_positive_score(y, s).map(|score| (id, score)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored.into_iter().take(k).map(|(id, _)| id).collect())
}

/// `ỹ(x,0)` for `y = σ(αx)` and `e = σ(βx)`: `1/(1 + e^{-(α-β)x} + e^{-αx})`.
pub fn example2_tilde_y(alpha: f64, beta: f64, x: f64) -> f64 {
    let a = -(alpha - beta) * x;
    let b = -alpha * x;
    // 1/(1 + e^a + e^b) = exp(-logsumexp(0, a, b))
    let m = 0f64.max(a).max(b);
    let lse = m + ((-m).exp() + (a - m).exp() + (b - m).exp()).ln();
    (-lse).exp()
}
