use crate::error::{domain, Result};
use crate::math::log_add_exp;

/// One-sided exact binomial test: `P(Bin(trials, 1/2) ≥ wins)`.
///
/// `trials` must already exclude ties. Returns `None` when there is
/// nothing to test (`trials == 0`).
pub fn binomial_win_test(wins: u64, trials: u64) -> Result<Option<f64>> {
    if wins > trials {
        return Err(domain(format!("wins ({wins}) exceed trials ({trials})")));
    }
    if trials == 0 {
        return Ok(None);
    }
    let n = trials as f64;
    // log C(n, k) / 2^n, accumulated from k = 0.
    let mut log_term = -n * std::f64::consts::LN_2;
    let mut log_tail = f64::NEG_INFINITY;
    for k in 0..=trials {
        if k >= wins {
            log_tail = log_add_exp(log_tail, log_term);
        }
        log_term += ((trials - k) as f64).ln() - ((k + 1) as f64).ln();
    }
    Ok(Some(log_tail.exp().min(1.0)))
}
