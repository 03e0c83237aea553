use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::propensity::PropensitySpec;
use crate::error::{domain, PuError, Result};
use crate::math::{sigmoid, std_normal_cdf};
use crate::rng::StreamRng;

/// A real-valued function of a feature vector.
pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Draws one feature vector from the marginal law of X.
pub type Sampler = Arc<dyn Fn(&mut StreamRng) -> Vec<f64> + Send + Sync>;

/// Gaussian with diagonal covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianLaw {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl GaussianLaw {
    pub fn standard(dims: usize) -> Self {
        Self {
            mean: vec![0.0; dims],
            variance: vec![1.0; dims],
        }
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        self.mean
            .iter()
            .zip(&self.variance)
            .zip(x)
            .map(|((m, v), xi)| -0.5 * ((xi - m).powi(2) / v + v.ln() + ln_2pi))
            .sum()
    }

    pub fn sample(&self, rng: &mut StreamRng) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.variance)
            .map(|(m, v)| {
                let z: f64 = rng.sample(StandardNormal);
                m + v.sqrt() * z
            })
            .collect()
    }
}

/// Two-component Gaussian mixture: `Y ~ Bernoulli(π)`, `X | Y` Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub class_prior: f64,
    pub positive: GaussianLaw,
    pub negative: GaussianLaw,
}

impl GaussianMixture {
    fn validate(&self) -> Result<()> {
        if !(self.class_prior > 0.0 && self.class_prior < 1.0) {
            return Err(domain(format!(
                "class prior must lie in (0,1), got {}",
                self.class_prior
            )));
        }
        let p = self.positive.dims();
        for law in [&self.positive, &self.negative] {
            if law.mean.len() != p || law.variance.len() != p {
                return Err(PuError::DimensionMismatch {
                    expected: p,
                    got: law.mean.len().min(law.variance.len()),
                });
            }
            if law.variance.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(domain("covariance entries must be strictly positive"));
            }
            if law.mean.iter().any(|m| !m.is_finite()) {
                return Err(domain("means must be finite"));
            }
        }
        Ok(())
    }

    /// Log-odds `log π f₁(x) - log (1-π) f₀(x)`.
    pub fn log_odds(&self, x: &[f64]) -> f64 {
        let pi = self.class_prior;
        (pi.ln() + self.positive.log_density(x)) - ((1.0 - pi).ln() + self.negative.log_density(x))
    }

    /// `(β, b)` with `y(x) = σ(βᵀx + b)` when both classes share a covariance.
    pub fn logistic_form(&self) -> Option<(Vec<f64>, f64)> {
        if self.positive.variance != self.negative.variance {
            return None;
        }
        let v = &self.positive.variance;
        let (m1, m0) = (&self.positive.mean, &self.negative.mean);
        let beta = (0..v.len()).map(|j| (m1[j] - m0[j]) / v[j]).collect();
        let quad: f64 = (0..v.len())
            .map(|j| (m1[j] * m1[j] - m0[j] * m0[j]) / (2.0 * v[j]))
            .sum();
        let pi = self.class_prior;
        Some((beta, (pi / (1.0 - pi)).ln() - quad))
    }
}

/// Law of `(X, Y)` for a scenario given by explicit function handles.
#[derive(Clone)]
pub struct DirectLaw {
    pub name: String,
    pub dims: usize,
    pub posterior: PointFn,
    pub sampler: Sampler,
}

#[derive(Clone)]
pub enum Law {
    Mixture(GaussianMixture),
    Direct(DirectLaw),
}

#[derive(Clone)]
pub enum Propensity {
    Spec(PropensitySpec),
    Custom { name: String, func: PointFn },
}

impl Propensity {
    fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            Propensity::Spec(s) => s.evaluate(x),
            Propensity::Custom { func, .. } => func(x).clamp(0.0, 1.0),
        }
    }
}

impl From<PropensitySpec> for Propensity {
    fn from(s: PropensitySpec) -> Self {
        Propensity::Spec(s)
    }
}

/// A fully specified generative triple: class prior, feature laws and
/// propensity. Exposes exact `y(x)`, `e(x)` and `s(x) = e(x)·y(x)`.
#[derive(Clone)]
pub struct Scenario {
    law: Law,
    propensity: Propensity,
    target_c: Option<f64>,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("fingerprint", &self.fingerprint())
            .field("dims", &self.dims())
            .field("target_c", &self.target_c)
            .finish()
    }
}

impl Scenario {
    pub fn gaussian_mixture(mixture: GaussianMixture, propensity: PropensitySpec) -> Result<Self> {
        mixture.validate()?;
        propensity.validate(mixture.positive.dims())?;
        Ok(Self {
            law: Law::Mixture(mixture),
            propensity: Propensity::Spec(propensity),
            target_c: None,
        })
    }

    /// Scenario from arbitrary handles for `y(x)`, `e(x)` and the law of X.
    pub fn direct(
        name: impl Into<String>,
        dims: usize,
        posterior: PointFn,
        propensity: Propensity,
        sampler: Sampler,
    ) -> Result<Self> {
        if dims == 0 {
            return Err(domain("scenario needs at least one dimension"));
        }
        if let Propensity::Spec(spec) = &propensity {
            spec.validate(dims)?;
        }
        Ok(Self {
            law: Law::Direct(DirectLaw {
                name: name.into(),
                dims,
                posterior,
                sampler,
            }),
            propensity,
            target_c: None,
        })
    }

    /// Univariate probit model: `X ~ N(0,1)`, `y(x) = Φ(x)`, `e(x) = 1{x > a}`.
    pub fn probit(a: f64) -> Result<Self> {
        Self::direct(
            format!("probit(a={a:?})"),
            1,
            Arc::new(|x: &[f64]| std_normal_cdf(x[0])),
            PropensitySpec::HardThreshold { a, axis: 0 }.into(),
            standard_normal_sampler(1),
        )
    }

    /// `y ≡ posterior`, `e ≡ propensity` over a one-dimensional standard normal X.
    pub fn constant(posterior: f64, propensity: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&posterior) {
            return Err(domain(format!(
                "posterior must lie in [0,1], got {posterior}"
            )));
        }
        Self::direct(
            format!("constant(y={posterior:?},e={propensity:?})"),
            1,
            Arc::new(move |_: &[f64]| posterior),
            PropensitySpec::Constant { c: propensity }.into(),
            standard_normal_sampler(1),
        )
    }

    pub fn with_target_c(mut self, c: f64) -> Self {
        self.target_c = Some(c);
        self
    }

    pub fn target_c(&self) -> Option<f64> {
        self.target_c
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn propensity(&self) -> &Propensity {
        &self.propensity
    }

    pub fn propensity_spec(&self) -> Option<&PropensitySpec> {
        match &self.propensity {
            Propensity::Spec(s) => Some(s),
            Propensity::Custom { .. } => None,
        }
    }

    pub fn mixture(&self) -> Option<&GaussianMixture> {
        match &self.law {
            Law::Mixture(m) => Some(m),
            Law::Direct(_) => None,
        }
    }

    pub fn dims(&self) -> usize {
        match &self.law {
            Law::Mixture(m) => m.positive.dims(),
            Law::Direct(d) => d.dims,
        }
    }

    pub fn class_prior(&self) -> Option<f64> {
        self.mixture().map(|m| m.class_prior)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dims() {
            return Err(PuError::DimensionMismatch {
                expected: self.dims(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(domain("feature vector must be finite"));
        }
        Ok(())
    }

    /// `y(x) = P(Y=1 | X=x)`.
    pub fn exact_posterior(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.posterior_unchecked(x))
    }

    /// `e(x) = P(S=1 | Y=1, X=x)`.
    pub fn exact_propensity(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.propensity.evaluate(x))
    }

    /// `s(x) = P(S=1 | X=x) = e(x)·y(x)`.
    pub fn exact_s(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(self.propensity.evaluate(x) * self.posterior_unchecked(x))
    }

    /// `(y(x), e(x))` without validating `x`; hot loops call this on
    /// vectors the scenario generated itself.
    pub(crate) fn oracles_unchecked(&self, x: &[f64]) -> (f64, f64) {
        (self.posterior_unchecked(x), self.propensity.evaluate(x))
    }

    fn posterior_unchecked(&self, x: &[f64]) -> f64 {
        match &self.law {
            Law::Mixture(m) => sigmoid(m.log_odds(x)),
            Law::Direct(d) => (d.posterior)(x).clamp(0.0, 1.0),
        }
    }

    /// Draw `(x, y)` from the joint law.
    pub fn sample_xy(&self, rng: &mut StreamRng) -> (Vec<f64>, bool) {
        match &self.law {
            Law::Mixture(m) => {
                let y = rng.random::<f64>() < m.class_prior;
                let x = if y {
                    m.positive.sample(rng)
                } else {
                    m.negative.sample(rng)
                };
                (x, y)
            }
            Law::Direct(d) => {
                let x = (d.sampler)(rng);
                let y = rng.random::<f64>() < self.posterior_unchecked(&x);
                (x, y)
            }
        }
    }

    /// Draw `x` from the marginal law of X.
    pub fn sample_x(&self, rng: &mut StreamRng) -> Vec<f64> {
        match &self.law {
            Law::Mixture(_) => self.sample_xy(rng).0,
            Law::Direct(d) => (d.sampler)(rng),
        }
    }

    /// Stable identifier of the generative law. Hex SHA-256 of the
    /// canonical JSON for parametric scenarios; the given name otherwise.
    pub fn fingerprint(&self) -> String {
        let prop = match &self.propensity {
            Propensity::Spec(s) => serde_json::to_string(s).expect("propensity serializes"),
            Propensity::Custom { name, .. } => format!("custom:{name}"),
        };
        match &self.law {
            Law::Mixture(m) => {
                let law = serde_json::to_string(m).expect("mixture serializes");
                let mut h = Sha256::new();
                h.update(law.as_bytes());
                h.update(b"|");
                h.update(prop.as_bytes());
                hex::encode(h.finalize())
            }
            Law::Direct(d) => format!("direct:{}|{}", d.name, prop),
        }
    }
}

/// Sampler for `N(0, I_dims)`.
pub fn standard_normal_sampler(dims: usize) -> Sampler {
    Arc::new(move |rng: &mut StreamRng| (0..dims).map(|_| rng.sample(StandardNormal)).collect())
}
