use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::model::{
    GrowthParams, MaturitySchedule, ModelParameters, MortalityParams, RecruitmentParams, SizeGrid,
};
use crate::observation::ObservationParams;
use crate::priors::catchability_name;
use crate::{Error, Result};

/// Everything about the model that is fixed rather than estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub grid: SizeGrid,
    pub first_year: i32,
    /// Number of modelled years `T`.
    pub years: usize,
    pub maturity: MaturitySchedule,
    /// Length at age zero (mm).
    pub l0: f64,
    /// Pre-sample AR(1) states.
    pub xi0: f64,
    pub zeta0: f64,
    /// Survey regimes that carry a catchability parameter.
    pub survey_ids: Vec<u32>,
    /// Give the survey index its own observation variance.
    pub split_observation_variance: bool,
}

impl ModelConfig {
    /// 24 one-millimetre classes on `[8, 32)`, maturity above 19 mm,
    /// `L_0 = 0`, survey regimes 1, 3 and 4.
    pub fn shrimp_default(first_year: i32, years: usize) -> Self {
        let grid = SizeGrid::shrimp_default();
        let maturity = MaturitySchedule::knife_edge(&grid, 19.0);
        Self {
            grid,
            first_year,
            years,
            maturity,
            l0: 0.0,
            xi0: 0.0,
            zeta0: 0.0,
            survey_ids: alloc::vec![1, 3, 4],
            split_observation_variance: false,
        }
    }

    pub fn last_year(&self) -> i32 {
        self.first_year + self.years as i32 - 1
    }

    /// 0-based index of `year` within the horizon.
    pub fn year_index(&self, year: i32) -> Option<usize> {
        let i = year - self.first_year;
        (i >= 0 && (i as usize) < self.years).then_some(i as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.years == 0 {
            return Err(Error::InvalidParameter {
                name: "years",
                reason: "horizon must be non-empty",
            });
        }
        if self.maturity.as_slice().len() != self.grid.classes() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.classes(),
                got: self.maturity.as_slice().len(),
            });
        }
        if !(self.l0 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "l0",
                reason: "must be non-negative",
            });
        }
        Ok(())
    }
}

/// Names of the static parameters shared by every configuration, in
/// layout order.
pub const BASE_PARAMETERS: [&str; 20] = [
    "l_inf",
    "sigma_l_inf",
    "k",
    "gamma_m",
    "gamma_f",
    "cv_f",
    "phi_f",
    "l50_f",
    "beta_f",
    "alpha_r",
    "beta_r",
    "alpha",
    "k_cap",
    "cv_r",
    "phi_r",
    "sigma_obs2",
    "alpha_w",
    "beta_w",
    "l50_s",
    "sigma_s2",
];

pub const SURVEY_VARIANCE_PARAMETER: &str = "sigma_obs2_survey";

/// Ordered list of static parameter names for a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterLayout {
    names: Vec<String>,
    survey_ids: Vec<u32>,
    split: bool,
}

impl ParameterLayout {
    pub fn new(config: &ModelConfig) -> Self {
        let mut names: Vec<String> = BASE_PARAMETERS.iter().map(|s| s.to_string()).collect();
        names.extend(config.survey_ids.iter().map(|id| catchability_name(*id)));
        if config.split_observation_variance {
            names.push(SURVEY_VARIANCE_PARAMETER.to_string());
        }
        Self {
            names,
            survey_ids: config.survey_ids.clone(),
            split: config.split_observation_variance,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Values in layout order from a name-keyed map.
    pub fn values_from_map(&self, map: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
        let values = self
            .names
            .iter()
            .map(|n| {
                map.get(n)
                    .copied()
                    .ok_or_else(|| Error::PriorSet(alloc::format!("missing value for `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(extra) = map.keys().find(|k| !self.names.contains(k)) {
            return Err(Error::PriorSet(alloc::format!("unknown parameter `{extra}`")));
        }
        Ok(values)
    }

    pub fn values_to_map(&self, values: &[f64]) -> BTreeMap<String, f64> {
        self.names.iter().cloned().zip(values.iter().copied()).collect()
    }

    /// Typed parameters from values in layout order.
    pub fn unpack(&self, values: &[f64], config: &ModelConfig) -> StaticParameters {
        let v = |i: usize| values[i];
        let q = self
            .survey_ids
            .iter()
            .enumerate()
            .map(|(j, id)| (*id, v(20 + j)))
            .collect();
        StaticParameters {
            model: ModelParameters {
                growth: GrowthParams {
                    l_inf: v(0),
                    sigma_l_inf: v(1),
                    k: v(2),
                    l0: config.l0,
                },
                mortality: MortalityParams {
                    gamma_m: v(3),
                    gamma_f: v(4),
                    cv_f: v(5),
                    phi_f: v(6),
                    l50_f: v(7),
                    beta_f: v(8),
                },
                recruitment: RecruitmentParams {
                    alpha_r: v(9),
                    beta_r: v(10),
                    alpha: v(11),
                    k_cap: v(12),
                    cv_r: v(13),
                    phi_r: v(14),
                },
                maturity: config.maturity.clone(),
            },
            observation: ObservationParams {
                sigma_obs2: v(15),
                sigma_obs2_survey: self.split.then(|| v(20 + self.survey_ids.len())),
                alpha_w: v(16),
                beta_w: v(17),
                l50_s: v(18),
                sigma_s2: v(19),
                q,
            },
        }
    }
}

/// Typed view of the static parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticParameters {
    pub model: ModelParameters,
    pub observation: ObservationParams,
}

/// A point in the posterior: static parameters (natural scale, layout
/// order) and the AR(1) innovation series `eps_t` (fishing) and `ups_t`
/// (recruitment), one per modelled year.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ParameterVector {
    pub statics: Vec<f64>,
    pub xi_innovations: Vec<f64>,
    pub zeta_innovations: Vec<f64>,
}

impl ParameterVector {
    pub fn is_finite(&self) -> bool {
        self.statics
            .iter()
            .chain(&self.xi_innovations)
            .chain(&self.zeta_innovations)
            .all(|v| v.is_finite())
    }
}
