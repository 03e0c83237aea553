//! Synthetic benchmark scenarios: two-component Gaussian mixtures with
//! logistic, powered-logistic or constant propensities whose intercept is
//! calibrated to a target label frequency.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PuError, Result};
use crate::math::{dot, pairwise_sum};
use crate::model::{
    GaussianLaw, GaussianMixture, Linear, PropensitySpec, PuDataset, Sample, Scenario,
};
use crate::rng::{derive_seed, substream};

pub const DEFAULT_DIMS: usize = 20;
pub const DEFAULT_MU_PER_COORDINATE: f64 = 0.25;
pub const DEFAULT_GAMMA: f64 = 0.5;
pub const DEFAULT_MC_POSITIVES: usize = 100_000;
pub const DEFAULT_CALIBRATION_TOL: f64 = 1e-6;
/// Exponent of the powered-logistic propensity.
pub const POWER_EXPONENT: f64 = 10.0;
const MAX_DOUBLINGS: u32 = 60;
const CALIBRATION_STREAM: u64 = 0xca11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// Shared identity covariance, `e(x) = σ(γᵀx + r)`.
    V1,
    /// Shared identity covariance, `e(x) = σ(γᵀx + r)^10`.
    V2,
    /// Positive class covariance `diag(1,2,1,2,…)`, `e(x) = σ(γᵀx + r)`.
    V3,
    /// Shared identity covariance, `e(x) ≡ c`.
    #[serde(rename = "SCAR")]
    Scar,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::V1, Variant::V2, Variant::V3, Variant::Scar];

    pub fn name(self) -> &'static str {
        match self {
            Variant::V1 => "V1",
            Variant::V2 => "V2",
            Variant::V3 => "V3",
            Variant::Scar => "SCAR",
        }
    }

    fn exponent(self) -> f64 {
        match self {
            Variant::V2 => POWER_EXPONENT,
            _ => 1.0,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_dims() -> usize {
    DEFAULT_DIMS
}
fn default_mu() -> f64 {
    DEFAULT_MU_PER_COORDINATE
}
fn default_mc_positives() -> usize {
    DEFAULT_MC_POSITIVES
}
fn default_tol() -> f64 {
    DEFAULT_CALIBRATION_TOL
}

/// Everything needed to build one synthetic scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    pub variant: Variant,
    #[serde(default = "default_dims")]
    pub dims: usize,
    #[serde(default = "default_mu")]
    pub mu_per_coordinate: f64,
    pub target_c: f64,
    /// Propensity slope; `0.5` on every coordinate when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default = "default_mc_positives")]
    pub mc_positives: usize,
    #[serde(default = "default_tol")]
    pub calibration_tol: f64,
}

impl VariantSpec {
    pub fn new(variant: Variant, target_c: f64) -> Self {
        Self {
            variant,
            dims: DEFAULT_DIMS,
            mu_per_coordinate: DEFAULT_MU_PER_COORDINATE,
            target_c,
            gamma: None,
            mc_positives: DEFAULT_MC_POSITIVES,
            calibration_tol: DEFAULT_CALIBRATION_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |field, reason: String| Err(PuError::InvalidConfig { field, reason });
        if self.dims == 0 {
            return invalid("dims", "must be at least 1".into());
        }
        if !self.mu_per_coordinate.is_finite() {
            return invalid(
                "mu_per_coordinate",
                format!("must be finite, got {}", self.mu_per_coordinate),
            );
        }
        let c = self.target_c;
        match self.variant {
            Variant::Scar if !(0.0..=1.0).contains(&c) => {
                return invalid("target_c", format!("must lie in [0,1] for SCAR, got {c}"));
            }
            Variant::V1 | Variant::V2 | Variant::V3 if !(c > 0.0 && c < 1.0) => {
                return invalid(
                    "target_c",
                    format!("must lie in (0,1) for {}, got {c}", self.variant),
                );
            }
            _ => {}
        }
        if let Some(g) = &self.gamma {
            if g.len() != self.dims {
                return invalid(
                    "gamma",
                    format!("has {} entries, expected {}", g.len(), self.dims),
                );
            }
            if g.iter().any(|v| !v.is_finite()) {
                return invalid("gamma", "entries must be finite".into());
            }
        }
        if self.mc_positives == 0 {
            return invalid("mc_positives", "must be positive".into());
        }
        if !(self.calibration_tol > 0.0) {
            return invalid(
                "calibration_tol",
                format!("must be positive, got {}", self.calibration_tol),
            );
        }
        Ok(())
    }

    pub fn gamma(&self) -> Vec<f64> {
        self.gamma
            .clone()
            .unwrap_or_else(|| vec![DEFAULT_GAMMA; self.dims])
    }

    /// Class prior 0.5, negatives `N(0, I)`, positives `N(μ, Σ₁)`.
    pub fn mixture(&self) -> GaussianMixture {
        let p = self.dims;
        let positive_variance = match self.variant {
            Variant::V3 => (0..p).map(|j| if j % 2 == 0 { 1.0 } else { 2.0 }).collect(),
            _ => vec![1.0; p],
        };
        GaussianMixture {
            class_prior: 0.5,
            positive: GaussianLaw {
                mean: vec![self.mu_per_coordinate; p],
                variance: positive_variance,
            },
            negative: GaussianLaw::standard(p),
        }
    }

    fn propensity(&self, intercept: f64) -> PropensitySpec {
        let base = Linear {
            gamma: self.gamma(),
            intercept,
        };
        match self.variant {
            Variant::V1 | Variant::V3 => PropensitySpec::LogisticLinear(base),
            Variant::V2 => PropensitySpec::Power {
                base,
                exponent: POWER_EXPONENT,
            },
            Variant::Scar => PropensitySpec::Constant { c: self.target_c },
        }
    }
}

/// Find the intercept `r` whose Monte-Carlo label frequency
/// `E[e(X) | Y=1]` over `mc_positives` positive draws is within `tol` of
/// the target. The frequency is increasing in `r`, so plain bisection on
/// an expanding symmetric bracket suffices.
pub fn calibrate_intercept(
    spec: &VariantSpec,
    mc_positives: usize,
    seed: u64,
    tol: f64,
) -> Result<f64> {
    spec.validate()?;
    if spec.variant == Variant::Scar {
        return Err(PuError::InvalidConfig {
            field: "variant",
            reason: "SCAR has no intercept to calibrate".into(),
        });
    }
    if mc_positives == 0 {
        return Err(PuError::InvalidConfig {
            field: "mc_positives",
            reason: "must be positive".into(),
        });
    }
    let positive = spec.mixture().positive;
    let gamma = spec.gamma();
    let scores: Vec<f64> = (0..mc_positives as u64)
        .into_par_iter()
        .map(|i| dot(&gamma, &positive.sample(&mut substream(seed, i))))
        .collect();
    let target = spec.target_c;
    let exponent = spec.variant.exponent();
    let propensity = |r: f64| -> Vec<f64> {
        let p = PropensitySpec::Power {
            base: Linear {
                gamma: vec![1.0],
                intercept: r,
            },
            exponent,
        };
        scores.iter().map(|&z| p.evaluate(&[z])).collect()
    };
    let gap = |r: f64| pairwise_sum(&propensity(r)) / scores.len() as f64 - target;
    solve_increasing(gap, tol)
}

/// Root of a nondecreasing function by bisection, expanding the symmetric
/// bracket `[-w, w]` (starting at `w = 1`) until it straddles a sign change.
pub fn solve_increasing<F: Fn(f64) -> f64>(gap: F, tol: f64) -> Result<f64> {
    let mut half_width = 1.0;
    let mut doublings = 0;
    let (mut lo, mut hi) = loop {
        let (lo, hi) = (-half_width, half_width);
        if gap(lo) <= 0.0 && gap(hi) >= 0.0 {
            break (lo, hi);
        }
        if doublings == MAX_DOUBLINGS {
            return Err(PuError::Calibration { lo, hi, doublings });
        }
        half_width *= 2.0;
        doublings += 1;
    };
    loop {
        let mid = 0.5 * (lo + hi);
        let g = gap(mid);
        if g.abs() <= tol || hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
            return Ok(mid);
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Build the scenario for `spec`, calibrating the propensity intercept
/// with a substream derived from `seed`.
pub fn build_scenario(spec: &VariantSpec, seed: u64) -> Result<Scenario> {
    spec.validate()?;
    let intercept = match spec.variant {
        Variant::Scar => 0.0,
        _ => calibrate_intercept(
            spec,
            spec.mc_positives,
            derive_seed(seed, &[CALIBRATION_STREAM]),
            spec.calibration_tol,
        )?,
    };
    Ok(
        Scenario::gaussian_mixture(spec.mixture(), spec.propensity(intercept))?
            .with_target_c(spec.target_c),
    )
}

/// How label indicators are assigned to positives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LabelingStrategy {
    /// `S | Y=1, X ~ Bernoulli(e(X))`.
    Probabilistic,
    /// Label the `⌊fraction · #positives⌋` positives with the highest
    /// linear score `weightsᵀx`.
    TopQuantile { weights: Vec<f64>, fraction: f64 },
}

/// Draw `n` iid records. Record `i` uses substream `i` of `seed`.
pub fn sample_dataset(
    scenario: &Scenario,
    n: usize,
    seed: u64,
    strategy: &LabelingStrategy,
) -> Result<PuDataset> {
    if n == 0 {
        return Err(PuError::InvalidConfig {
            field: "n",
            reason: "must be at least 1".into(),
        });
    }
    if let LabelingStrategy::TopQuantile { weights, fraction } = strategy {
        if weights.len() != scenario.dims() {
            return Err(PuError::DimensionMismatch {
                expected: scenario.dims(),
                got: weights.len(),
            });
        }
        if !(0.0..=1.0).contains(fraction) {
            return Err(PuError::InvalidConfig {
                field: "fraction",
                reason: format!("must lie in [0,1], got {fraction}"),
            });
        }
    }
    let draws: Vec<(Vec<f64>, bool, bool)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i);
            let (x, y) = scenario.sample_xy(&mut rng);
            let u: f64 = rng.random();
            let s = y
                && matches!(strategy, LabelingStrategy::Probabilistic)
                && u < scenario.oracles_unchecked(&x).1;
            (x, y, s)
        })
        .collect();

    let (draws, target_c) = match strategy {
        LabelingStrategy::Probabilistic => (draws, scenario.target_c()),
        LabelingStrategy::TopQuantile { weights, fraction } => {
            let mut ranked: Vec<(usize, f64)> = draws
                .iter()
                .enumerate()
                .filter(|(_, d)| d.1)
                .map(|(i, d)| (i, dot(weights, &d.0)))
                .collect();
            if ranked.is_empty() {
                return Err(PuError::Labeling(
                    "sample contains no positives to label".into(),
                ));
            }
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            let take = (fraction * ranked.len() as f64).floor() as usize;
            let mut draws = draws;
            for &(i, _) in &ranked[..take] {
                draws[i].2 = true;
            }
            (draws, Some(*fraction))
        }
    };
    let samples = draws
        .into_iter()
        .map(|(x, y, s)| Sample::new(x, y, s))
        .collect::<Result<Vec<_>>>()?;
    PuDataset::new(samples, scenario.fingerprint(), target_c, seed)
}
