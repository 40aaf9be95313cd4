//! Egg production and Beverton-Holt recruitment.

use alloc::vec::Vec;

use super::{PopulationState, SizeGrid};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RecruitmentParams {
    /// Fecundity scale of `alpha_r * l^beta_r`.
    pub alpha_r: f64,
    /// Fecundity exponent.
    pub beta_r: f64,
    /// Beverton-Holt slope at the origin, in (0, 1).
    pub alpha: f64,
    /// Asymptotic maximum expected recruits.
    pub k_cap: f64,
    pub cv_r: f64,
    /// AR(1) coefficient of the recruitment deviations.
    pub phi_r: f64,
}

impl RecruitmentParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha_r", self.alpha_r),
            ("beta_r", self.beta_r),
            ("k_cap", self.k_cap),
            ("cv_r", self.cv_r),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be positive",
                });
            }
        }
        for (name, v) in [("alpha", self.alpha), ("phi_r", self.phi_r)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must lie in (0, 1)",
                });
            }
        }
        Ok(())
    }

    pub fn sigma_r2(&self) -> f64 {
        libm::log1p(self.cv_r * self.cv_r)
    }

    pub fn innovation_variance(&self) -> f64 {
        (1.0 - self.phi_r * self.phi_r) * self.sigma_r2()
    }

    /// Mean eggs of a mature female at length `l`.
    pub fn fecundity(&self, l: f64) -> f64 {
        self.alpha_r * libm::pow(l, self.beta_r)
    }
}

/// Proportion of mature females among all individuals, per class.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct MaturitySchedule {
    mature_female_fraction: Vec<f64>,
}

impl MaturitySchedule {
    pub fn new(mature_female_fraction: Vec<f64>) -> Result<Self> {
        if mature_female_fraction
            .iter()
            .any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::InvalidParameter {
                name: "maturity",
                reason: "fractions must lie in [0, 1]",
            });
        }
        Ok(Self {
            mature_female_fraction,
        })
    }

    /// Knife-edge schedule: fraction 1 for classes with midpoint above
    /// `threshold`, 0 otherwise.
    pub fn knife_edge(grid: &SizeGrid, threshold: f64) -> Self {
        Self {
            mature_female_fraction: grid
                .midpoints()
                .iter()
                .map(|&l| if l > threshold { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mature_female_fraction
    }
}

/// Total eggs produced from the state at the start of the period.
pub fn egg_production(
    prev_state: &PopulationState,
    grid: &SizeGrid,
    maturity: &MaturitySchedule,
    p: &RecruitmentParams,
) -> f64 {
    prev_state
        .as_slice()
        .iter()
        .zip(grid.midpoints())
        .zip(maturity.as_slice())
        .filter(|((n, _), u)| **n > 0.0 && **u > 0.0)
        .map(|((n, &l), u)| n * u * p.fecundity(l))
        .sum()
}

/// Beverton-Holt expected recruits `K E / (K / alpha + E)`.
pub fn beverton_holt(eggs: f64, p: &RecruitmentParams) -> f64 {
    if eggs <= 0.0 {
        return 0.0;
    }
    // K E / (K/alpha + E) = K / (K / (alpha E) + 1), finite for huge E
    p.k_cap / (p.k_cap / (p.alpha * eggs) + 1.0)
}

/// Advance the recruitment deviation `zeta` and return `(zeta, R_t)`.
///
/// Fails with [`Error::ZeroExpectedRecruits`] when there are no eggs, since
/// the log-normal location `log h(E) - sigma_R^2 / 2` is then undefined.
pub fn recruitment_step(
    eggs: f64,
    zeta_prev: f64,
    innovation: f64,
    p: &RecruitmentParams,
) -> Result<(f64, f64)> {
    let zeta = p.phi_r * zeta_prev + innovation;
    let expected = beverton_holt(eggs, p);
    if !(expected > 0.0) {
        return Err(Error::ZeroExpectedRecruits);
    }
    let mu = libm::log(expected) - 0.5 * p.sigma_r2();
    Ok((zeta, libm::exp(mu + zeta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn params() -> RecruitmentParams {
        RecruitmentParams {
            alpha_r: 0.135,
            beta_r: 3.0,
            alpha: 0.05,
            k_cap: 1e10,
            cv_r: 0.9,
            phi_r: 0.5,
        }
    }

    #[test]
    fn eggs_single_class() {
        // first class has midpoint 22
        let grid = SizeGrid::new(vec![21.0, 23.0, 24.0]).unwrap();
        let state = PopulationState::new(vec![1000.0, 0.0]).unwrap();
        let maturity = MaturitySchedule::new(vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(
            egg_production(&state, &grid, &maturity, &params()),
            1_437_480.0,
            max_relative = 1e-14
        );
        let none = MaturitySchedule::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(egg_production(&state, &grid, &none, &params()), 0.0);
        let empty = PopulationState::zeros(2);
        assert_eq!(egg_production(&empty, &grid, &maturity, &params()), 0.0);
    }

    #[test]
    fn knife_edge_maturity_above_19() {
        let grid = SizeGrid::shrimp_default();
        let m = MaturitySchedule::knife_edge(&grid, 19.0);
        // midpoints 8.5 .. 18.5 immature, 19.5 onwards mature
        assert_eq!(m.as_slice().iter().filter(|u| **u == 1.0).count(), 13);
        assert_eq!(m.as_slice()[11], 1.0);
        assert_eq!(m.as_slice()[10], 0.0);
    }

    #[test]
    fn beverton_holt_values() {
        let p = params();
        assert_eq!(beverton_holt(0.0, &p), 0.0);
        assert_relative_eq!(beverton_holt(2e11, &p), 5e9, max_relative = 1e-14);
        assert_relative_eq!(beverton_holt(1e30, &p), 1e10, max_relative = 1e-6);
    }

    #[test]
    fn recruitment_step_values() {
        let p = params();
        let (zeta, r) = recruitment_step(2e11, 0.0, 0.0, &p).unwrap();
        assert_eq!(zeta, 0.0);
        assert_relative_eq!(r, 5e9 * libm::exp(-p.sigma_r2() / 2.0), max_relative = 1e-14);

        let (zeta, r) = recruitment_step(2e11, 0.4, 0.1, &p).unwrap();
        assert_abs_diff_eq!(zeta, 0.3, epsilon = 1e-15);
        // mpmath: exp(log(5e9) - log(1.81)/2 + 0.3)
        assert_relative_eq!(r, 5_016_710_749.657_116, max_relative = 1e-13);

        assert_eq!(
            recruitment_step(0.0, 0.0, 0.0, &p),
            Err(Error::ZeroExpectedRecruits)
        );
    }
}
