//! Prior families, the default prior table and unconstrained
//! reparametrisations.
//!
//! Every second hyperparameter is a *variance*: `LogNormal { mu, sigma2 }`
//! is the law of `exp(Y)` with `Y ~ N(mu, sigma2)`, and so on.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution};

use crate::math::{
    ln_gamma, ln_normal_pdf, logistic, logit, softplus, trigamma, LOGISTIC_SD,
};
use crate::sampling::standard_normal;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PriorSpec {
    LogNormal { mu: f64, sigma2: f64 },
    Normal { mu: f64, sigma2: f64 },
    Uniform { a: f64, b: f64 },
    /// `a + (b - a) * logistic(Y)` with `Y ~ N(mu, sigma2)`.
    LogitNormalScaled { mu: f64, sigma2: f64, a: f64, b: f64 },
    /// `nu * s2 / X` with `X ~ chi^2(nu)`.
    ScaledInvChiSquared { nu: f64, s2: f64 },
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PriorSpec::LogNormal { mu, sigma2 } | PriorSpec::Normal { mu, sigma2 } => {
                mu.is_finite() && sigma2 > 0.0 && sigma2.is_finite()
            }
            PriorSpec::Uniform { a, b } => a.is_finite() && b.is_finite() && a < b,
            PriorSpec::LogitNormalScaled { mu, sigma2, a, b } => {
                mu.is_finite() && sigma2 > 0.0 && sigma2.is_finite() && a.is_finite() && b.is_finite() && a < b
            }
            PriorSpec::ScaledInvChiSquared { nu, s2 } => nu > 0.0 && s2 > 0.0 && nu.is_finite() && s2.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::PriorSet(alloc::format!("invalid hyperparameters in {self:?}")))
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match *self {
            PriorSpec::LogNormal { .. } | PriorSpec::ScaledInvChiSquared { .. } => x > 0.0,
            PriorSpec::Normal { .. } => true,
            PriorSpec::Uniform { a, b } => x >= a && x <= b,
            PriorSpec::LogitNormalScaled { a, b, .. } => x > a && x < b,
        }
    }

    /// Log-density at `x`; `-inf` off the support.
    pub fn log_density(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return f64::NEG_INFINITY;
        }
        match *self {
            PriorSpec::LogNormal { mu, sigma2 } => {
                let y = libm::log(x);
                ln_normal_pdf(y, mu, sigma2) - y
            }
            PriorSpec::Normal { mu, sigma2 } => ln_normal_pdf(x, mu, sigma2),
            PriorSpec::Uniform { a, b } => -libm::log(b - a),
            PriorSpec::LogitNormalScaled { mu, sigma2, a, b } => {
                let y = logit((x - a) / (b - a));
                // dy/dx = (b - a) / ((x - a)(b - x))
                ln_normal_pdf(y, mu, sigma2) + libm::log(b - a) - libm::log(x - a) - libm::log(b - x)
            }
            PriorSpec::ScaledInvChiSquared { nu, s2 } => {
                let h = 0.5 * nu;
                h * libm::log(h * s2) - ln_gamma(h) - (h + 1.0) * libm::log(x) - h * s2 / x
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            PriorSpec::LogNormal { mu, sigma2 } => libm::exp(mu + libm::sqrt(sigma2) * standard_normal(rng)),
            PriorSpec::Normal { mu, sigma2 } => mu + libm::sqrt(sigma2) * standard_normal(rng),
            PriorSpec::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            PriorSpec::LogitNormalScaled { mu, sigma2, a, b } => {
                loop {
                    let y = mu + libm::sqrt(sigma2) * standard_normal(rng);
                    let x = a + (b - a) * logistic(y);
                    // logistic saturates to exactly 0 or 1 beyond |y| ~ 37
                    if x > a && x < b {
                        return x;
                    }
                }
            }
            PriorSpec::ScaledInvChiSquared { nu, s2 } => {
                let chi = ChiSquared::new(nu).expect("validated nu > 0");
                nu * s2 / chi.sample(rng)
            }
        }
    }

    /// Map a natural-scale value to the unconstrained real line.
    pub fn to_unconstrained(&self, x: f64) -> f64 {
        match *self {
            PriorSpec::LogNormal { .. } | PriorSpec::ScaledInvChiSquared { .. } => libm::log(x),
            PriorSpec::Normal { .. } => x,
            PriorSpec::Uniform { a, b } | PriorSpec::LogitNormalScaled { a, b, .. } => {
                logit((x - a) / (b - a))
            }
        }
    }

    pub fn from_unconstrained(&self, y: f64) -> f64 {
        match *self {
            PriorSpec::LogNormal { .. } | PriorSpec::ScaledInvChiSquared { .. } => libm::exp(y),
            PriorSpec::Normal { .. } => y,
            PriorSpec::Uniform { a, b } | PriorSpec::LogitNormalScaled { a, b, .. } => {
                a + (b - a) * logistic(y)
            }
        }
    }

    /// `log |dx/dy|` of [`from_unconstrained`](Self::from_unconstrained).
    pub fn log_jacobian(&self, y: f64) -> f64 {
        match *self {
            PriorSpec::LogNormal { .. } | PriorSpec::ScaledInvChiSquared { .. } => y,
            PriorSpec::Normal { .. } => 0.0,
            PriorSpec::Uniform { a, b } | PriorSpec::LogitNormalScaled { a, b, .. } => {
                libm::log(b - a) - softplus(-y) - softplus(y)
            }
        }
    }

    /// Prior standard deviation on the unconstrained scale; used to shape
    /// the initial random-walk proposal.
    pub fn unconstrained_scale(&self) -> f64 {
        match *self {
            PriorSpec::LogNormal { sigma2, .. }
            | PriorSpec::Normal { sigma2, .. }
            | PriorSpec::LogitNormalScaled { sigma2, .. } => libm::sqrt(sigma2),
            PriorSpec::Uniform { .. } => LOGISTIC_SD,
            // log X = log(nu s2) - log(chi^2_nu); Var log chi^2_nu = psi'(nu / 2)
            PriorSpec::ScaledInvChiSquared { nu, .. } => libm::sqrt(trigamma(0.5 * nu)),
        }
    }

    /// Median on the natural scale.
    pub fn median(&self) -> f64 {
        match *self {
            PriorSpec::LogNormal { mu, .. } => libm::exp(mu),
            PriorSpec::Normal { mu, .. } => mu,
            PriorSpec::Uniform { a, b } => 0.5 * (a + b),
            PriorSpec::LogitNormalScaled { mu, a, b, .. } => a + (b - a) * logistic(mu),
            PriorSpec::ScaledInvChiSquared { nu, s2 } => {
                // Wilson-Hilferty approximation to the chi^2 median
                let c = 2.0 / (9.0 * nu);
                let med = nu * libm::pow(1.0 - c, 3.0);
                nu * s2 / med
            }
        }
    }
}

/// Prior specifications keyed by parameter name.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct PriorSet(BTreeMap<String, PriorSpec>);

impl PriorSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, spec: PriorSpec) -> Option<PriorSpec> {
        self.0.insert(name.into(), spec)
    }

    pub fn get(&self, name: &str) -> Option<&PriorSpec> {
        self.0.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &PriorSpec)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Replace entries with those of `overrides`.
    pub fn merge(&mut self, overrides: &PriorSet) {
        for (k, v) in &overrides.0 {
            self.0.insert(k.clone(), *v);
        }
    }

    /// Specs in the order of `names`, checking that the set covers exactly
    /// those parameters.
    pub fn ordered(&self, names: &[String]) -> Result<Vec<PriorSpec>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let spec = self
                .0
                .get(n)
                .ok_or_else(|| Error::PriorSet(alloc::format!("no prior for parameter `{n}`")))?;
            spec.validate()?;
            out.push(*spec);
        }
        if let Some(extra) = self.0.keys().find(|k| !names.contains(k)) {
            return Err(Error::PriorSet(alloc::format!("prior for unknown parameter `{extra}`")));
        }
        Ok(out)
    }
}

fn log_normal(median: f64, sigma2: f64) -> PriorSpec {
    PriorSpec::LogNormal {
        mu: libm::log(median),
        sigma2,
    }
}

/// The default prior table for the shrimp model, with catchabilities for
/// survey regimes 1, 3 and 4.
pub fn default_prior_set() -> PriorSet {
    default_prior_set_for(&[1, 3, 4])
}

/// The default prior table with a catchability prior for each of
/// `survey_ids`.
pub fn default_prior_set_for(survey_ids: &[u32]) -> PriorSet {
    use PriorSpec::*;
    let mut set = PriorSet::new();
    // growth
    set.insert("l_inf", LogitNormalScaled { mu: 1.0, sigma2: 1.0, a: 26.5, b: 27.5 });
    set.insert("sigma_l_inf", LogitNormalScaled { mu: 0.0, sigma2: 1.0, a: 0.01, b: 1.0 });
    set.insert("k", LogitNormalScaled { mu: 0.0, sigma2: 1.0, a: 0.4, b: 0.5 });
    // survival and mortality
    set.insert("gamma_m", log_normal(0.75, 0.001));
    set.insert("gamma_f", log_normal(0.4, 0.05));
    set.insert("cv_f", Uniform { a: 0.0, b: 1.0 });
    set.insert("phi_f", Uniform { a: 0.1, b: 0.9 });
    set.insert("l50_f", log_normal(18.0, 0.005));
    set.insert("beta_f", log_normal(0.3, 0.1));
    // reproduction and recruitment
    set.insert("alpha_r", LogNormal { mu: -2.0, sigma2: 1.0 });
    set.insert("beta_r", Normal { mu: 3.0, sigma2: 0.4 });
    set.insert("alpha", LogitNormalScaled { mu: -3.0, sigma2: 1.0, a: 0.0, b: 1.0 });
    set.insert("k_cap", LogNormal { mu: 23.025, sigma2: 1.33 * 1.33 });
    set.insert("cv_r", log_normal(0.9, 0.2));
    set.insert("phi_r", Uniform { a: 0.1, b: 0.9 });
    // observation models
    set.insert("sigma_obs2", ScaledInvChiSquared { nu: 15.0, s2: 1000.0 * 1000.0 });
    set.insert("alpha_w", log_normal(0.000_482_71, 0.01));
    set.insert("beta_w", Normal { mu: 3.0576, sigma2: 0.001 });
    set.insert("l50_s", log_normal(18.0, 0.005));
    set.insert("sigma_s2", ScaledInvChiSquared { nu: 10.0, s2: 50.0 * 50.0 });
    for id in survey_ids {
        set.insert(catchability_name(*id), log_normal(0.173, 0.3));
    }
    set
}

/// Parameter name of the catchability of `survey_id`.
pub fn catchability_name(survey_id: u32) -> String {
    alloc::format!("q_{survey_id}")
}
