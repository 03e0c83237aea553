//! Bayes risks of the feature-only and augmented rules, their difference,
//! and the bounds `E[s(X)·1{y(X) < 1/2}] ≤ Δ ≤ P(S=1)`.
//!
//! The univariate probit model with hard-threshold labeling has closed
//! forms; every other scenario is handled by Monte-Carlo with plug-in
//! standard errors.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PuError, Result};
use crate::math::std_normal_cdf;
use crate::model::Scenario;
use crate::rng::substream;
use crate::stats::{Estimate, Moments};

/// Smallest accepted Monte-Carlo sample size.
pub const MIN_MC_DRAWS: usize = 1_000;
/// Draws per substream. Fixed so results do not depend on the thread count.
const BLOCK: usize = 4_096;

/// Closed-form risks for `X ~ N(0,1)`, `y(x) = Φ(x)`, `e(x) = 1{x > a}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbitReport {
    pub a: f64,
    pub l_star: f64,
    pub l_star_pu: f64,
    pub excess: f64,
    pub p_s1: f64,
    pub p_s0: f64,
}

pub fn probit_closed_form(a: f64) -> ProbitReport {
    let phi = std_normal_cdf(a);
    let phi_sq = phi * phi;
    let (l_star_pu, excess) = if a > 0.0 {
        // 1 - Φ(a) = Φ(-a) keeps full precision in the upper tail.
        let tail = std_normal_cdf(-a);
        (phi - phi_sq / 2.0 - 0.25, tail * tail / 2.0)
    } else {
        (phi_sq / 2.0, 0.25 - phi_sq / 2.0)
    };
    let p_s1 = (1.0 - phi_sq) / 2.0;
    ProbitReport {
        a,
        l_star: 0.25,
        l_star_pu,
        excess,
        p_s1,
        p_s0: (1.0 + phi_sq) / 2.0,
    }
}

/// Monte-Carlo risk estimates for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub n_mc: usize,
    pub seed: u64,
    /// `L* = E[min(y, 1-y)]`.
    pub l_star: Estimate,
    /// `L*_PU = (P(S=0) - E_{X,S=0}|2ỹ - 1|)/2` with S sampled.
    pub l_star_pu: Estimate,
    /// `L*_PU = (P(S=0) - E|w(X)|)/2`, `w = 1 + s - 2y`, integrated over X only.
    pub l_star_pu_w: Estimate,
    /// `L*⁰_PU = L*_PU / P(S=0)`, the risk within the unlabeled stratum.
    pub l_star_pu_stratum: Estimate,
    /// `Δ = L* - L*_PU`, paired per draw with the `w` form.
    pub excess: Estimate,
    pub p_s1: Estimate,
    /// `E[s(X)·1{y(X) < 1/2}]`.
    pub bound_lower: Estimate,
    /// `E[s(X)] = P(S=1)`.
    pub bound_upper: Estimate,
}

impl RiskReport {
    /// `|stratum form - w form|` in units of their combined standard error.
    pub fn l_star_pu_discrepancy(&self) -> f64 {
        let a = self.l_star_pu;
        let b = self.l_star_pu_w;
        let se = a.std_error.hypot(b.std_error);
        if se == 0.0 {
            if a.estimate == b.estimate {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (a.estimate - b.estimate).abs() / se
        }
    }
}

/// Excess risk of the feature-only rule with its bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessRisk {
    pub delta: Estimate,
    pub lower: Estimate,
    pub upper: Estimate,
    /// `min(Δ - lower, upper - Δ)`; negative means a bound is violated.
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    bayes: Moments,
    pu_stratum: Moments,
    pu_w: Moments,
    unlabeled_only: Moments,
    delta: Moments,
    s1: Moments,
    lower: Moments,
    upper: Moments,
}

impl Accumulator {
    fn push(&mut self, y: f64, s: f64, labeled: bool) {
        let bayes = y.min(1.0 - y);
        let w_term = 0.5 * ((1.0 - s) - (1.0 + s - 2.0 * y).abs());
        self.bayes.push(bayes);
        self.pu_w.push(w_term);
        // Equal to `bayes - w_term`, written without cancellation.
        let delta = if y < 0.5 {
            s
        } else {
            (1.0 + s - 2.0 * y).max(0.0)
        };
        self.delta.push(delta);
        self.s1.push(if labeled { 1.0 } else { 0.0 });
        self.upper.push(s);
        self.lower.push(if y < 0.5 { s } else { 0.0 });
        if labeled {
            self.pu_stratum.push(0.0);
        } else {
            let tilde = ((y - s) / (1.0 - s)).clamp(0.0, 1.0);
            let term = 0.5 * (1.0 - (2.0 * tilde - 1.0).abs());
            self.pu_stratum.push(term);
            self.unlabeled_only.push(term);
        }
    }

    fn merge(&mut self, o: &Accumulator) {
        self.bayes.merge(&o.bayes);
        self.pu_stratum.merge(&o.pu_stratum);
        self.pu_w.merge(&o.pu_w);
        self.unlabeled_only.merge(&o.unlabeled_only);
        self.delta.merge(&o.delta);
        self.s1.merge(&o.s1);
        self.lower.merge(&o.lower);
        self.upper.merge(&o.upper);
    }
}

fn accumulate(scenario: &Scenario, n_mc: usize, seed: u64) -> Accumulator {
    let blocks = n_mc.div_ceil(BLOCK);
    let partial: Vec<Accumulator> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b as u64);
            let mut acc = Accumulator::default();
            let len = BLOCK.min(n_mc - b * BLOCK);
            for _ in 0..len {
                let x = scenario.sample_x(&mut rng);
                let (y, e) = scenario.oracles_unchecked(&x);
                let s = e * y;
                let labeled = rng.random::<f64>() < s;
                acc.push(y, s, labeled);
            }
            acc
        })
        .collect();
    partial.iter().fold(Accumulator::default(), |mut acc, p| {
        acc.merge(p);
        acc
    })
}

/// Monte-Carlo estimates of `L*`, both forms of `L*_PU`, `L*⁰_PU`, `Δ`
/// and its bounds from `n_mc` draws of `(X, S)`.
pub fn mc_bayes_risk(scenario: &Scenario, n_mc: usize, seed: u64) -> Result<RiskReport> {
    if n_mc < MIN_MC_DRAWS {
        return Err(PuError::InvalidConfig {
            field: "n_mc",
            reason: format!("must be at least {MIN_MC_DRAWS}, got {n_mc}"),
        });
    }
    let acc = accumulate(scenario, n_mc, seed);
    if acc.unlabeled_only.count == 0 {
        return Err(PuError::DegenerateStratum(format!(
            "no unlabeled draws among {n_mc}; P(S=0) estimate is 0"
        )));
    }
    let l_star_pu = acc.pu_stratum.estimate();
    let p_s0 = acc.unlabeled_only.count as f64 / n_mc as f64;
    let stratum = acc.unlabeled_only.estimate();
    Ok(RiskReport {
        n_mc,
        seed,
        l_star: acc.bayes.estimate(),
        l_star_pu,
        l_star_pu_w: acc.pu_w.estimate(),
        l_star_pu_stratum: Estimate {
            estimate: l_star_pu.estimate / p_s0,
            std_error: stratum.std_error,
        },
        excess: acc.delta.estimate(),
        p_s1: acc.s1.estimate(),
        bound_lower: acc.lower.estimate(),
        bound_upper: acc.upper.estimate(),
    })
}

/// `Δ = L* - L*_PU` with its lower and upper bounds.
pub fn mc_excess_risk(scenario: &Scenario, n_mc: usize, seed: u64) -> Result<ExcessRisk> {
    let r = mc_bayes_risk(scenario, n_mc, seed)?;
    Ok(excess_from_report(&r))
}

pub fn excess_from_report(r: &RiskReport) -> ExcessRisk {
    let delta = r.excess;
    ExcessRisk {
        delta,
        lower: r.bound_lower,
        upper: r.bound_upper,
        margin: (delta.estimate - r.bound_lower.estimate)
            .min(r.bound_upper.estimate - delta.estimate),
    }
}
