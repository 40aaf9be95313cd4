//! Natural and fishing mortality.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{Mode, PopulationState};
use crate::sampling::{as_count, multinomial_into};
use crate::{Error, Result};

/// Mortality parameters.
///
/// `gamma_f` is the mean of the log-normal marginal of `F^max`, `cv_f` its
/// coefficient of variation and `phi_f` the AR(1) coefficient of
/// `log F^max`. Gear selectivity is logistic with 50% point `l50_f` and
/// slope `beta_f`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MortalityParams {
    pub gamma_m: f64,
    pub gamma_f: f64,
    pub cv_f: f64,
    pub phi_f: f64,
    pub l50_f: f64,
    pub beta_f: f64,
}

impl MortalityParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma_m", self.gamma_m),
            ("gamma_f", self.gamma_f),
            ("cv_f", self.cv_f),
            ("l50_f", self.l50_f),
            ("beta_f", self.beta_f),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be positive",
                });
            }
        }
        if !(self.phi_f > 0.0 && self.phi_f < 1.0) {
            return Err(Error::InvalidParameter {
                name: "phi_f",
                reason: "must lie in (0, 1)",
            });
        }
        Ok(())
    }

    /// Marginal variance of `log F^max`.
    pub fn sigma_f2(&self) -> f64 {
        libm::log1p(self.cv_f * self.cv_f)
    }

    /// Marginal mean of `log F^max`.
    pub fn mu_f(&self) -> f64 {
        libm::log(self.gamma_f) - 0.5 * self.sigma_f2()
    }

    /// Variance of the AR(1) innovations, `(1 - phi^2) sigma_F^2`.
    pub fn innovation_variance(&self) -> f64 {
        (1.0 - self.phi_f * self.phi_f) * self.sigma_f2()
    }
}

/// Logistic gear selectivity at length `l`.
pub fn gear_selectivity(l: f64, p: &MortalityParams) -> f64 {
    // alpha_f + beta_f * l with alpha_f = -beta_f * l50_f
    let x = p.beta_f * (l - p.l50_f);
    crate::math::logistic(x)
}

/// Advance the fishing deviation `xi` one year and return `(xi, F^max)`.
pub fn fishing_mortality_step(xi_prev: f64, innovation: f64, p: &MortalityParams) -> (f64, f64) {
    let xi = p.phi_f * xi_prev + innovation;
    (xi, libm::exp(p.mu_f() + xi))
}

/// Per-class probabilities of surviving, being caught and dying naturally.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BaranovSplit {
    pub pi_s: Vec<f64>,
    pub pi_c: Vec<f64>,
    pub pi_d: Vec<f64>,
}

impl BaranovSplit {
    pub fn classes(&self) -> usize {
        self.pi_s.len()
    }

    /// Triplet for a single class with fishing rate `f` and natural rate
    /// `m`, `f + m > 0`.
    #[inline]
    pub fn triplet(f: f64, m: f64) -> (f64, f64, f64) {
        let z = f + m;
        let dead = -libm::expm1(-z);
        let survive = libm::exp(-z);
        (survive, f / z * dead, m / z * dead)
    }
}

/// Baranov split for per-class fishing rates `f` and natural rates `m_nat`.
pub fn baranov_split(f: &[f64], m_nat: &[f64]) -> Result<BaranovSplit> {
    if f.len() != m_nat.len() {
        return Err(Error::DimensionMismatch {
            expected: f.len(),
            got: m_nat.len(),
        });
    }
    let n = f.len();
    let mut split = BaranovSplit {
        pi_s: Vec::with_capacity(n),
        pi_c: Vec::with_capacity(n),
        pi_d: Vec::with_capacity(n),
    };
    for (&fi, &mi) in f.iter().zip(m_nat) {
        if !(fi >= 0.0) || !(mi > 0.0) {
            return Err(Error::InvalidParameter {
                name: "mortality rate",
                reason: "need F >= 0 and M > 0",
            });
        }
        let (s, c, d) = BaranovSplit::triplet(fi, mi);
        split.pi_s.push(s);
        split.pi_c.push(c);
        split.pi_d.push(d);
    }
    Ok(split)
}

/// Split `n_g` into survivors, catch and natural deaths.
pub fn apply_mortality<R: Rng + ?Sized>(
    n_g: &PopulationState,
    split: &BaranovSplit,
    mode: Mode,
    rng: &mut R,
) -> Result<(PopulationState, PopulationState, PopulationState)> {
    let m = n_g.classes();
    if split.classes() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: split.classes(),
        });
    }
    let mut s = vec![0.0; m];
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    for (i, &n) in n_g.as_slice().iter().enumerate() {
        let probs = [split.pi_s[i], split.pi_c[i], split.pi_d[i]];
        match mode {
            Mode::Expected => {
                s[i] = n * probs[0];
                c[i] = n * probs[1];
                d[i] = n * probs[2];
            }
            Mode::Stochastic => {
                let count = as_count(n).ok_or(Error::NonIntegerState { class: i, value: n })?;
                let mut out = [0.0; 3];
                multinomial_into(count, &probs, rng, &mut out);
                s[i] = out[0];
                c[i] = out[1];
                d[i] = out[2];
            }
        }
    }
    Ok((
        PopulationState::from_raw(s),
        PopulationState::from_raw(c),
        PopulationState::from_raw(d),
    ))
}
