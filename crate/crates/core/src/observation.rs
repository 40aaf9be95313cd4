//! Observation models linking states to catch and survey-biomass data.
//!
//! Catch in tonnes is `sum_i N^C_i w(l_i) / 1e6`; the survey index is the
//! biomass of `q s(l_i) N^G_i (pi^S_i)^delta`, where `delta` is the fraction
//! of the year elapsed when the survey is taken. Both are observed with
//! additive normal noise.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::math::{ln_normal_pdf, normal_cdf};
use crate::model::{BaranovSplit, PopulationState, SizeGrid};
use crate::sampling::standard_normal;
use crate::{Error, Result};

const GRAMS_PER_TONNE: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ObservationParams {
    /// Observation variance (tonnes^2), shared by catch and survey unless
    /// `sigma_obs2_survey` is set.
    pub sigma_obs2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_obs2_survey: Option<f64>,
    pub alpha_w: f64,
    pub beta_w: f64,
    pub l50_s: f64,
    pub sigma_s2: f64,
    /// Catchability per survey regime.
    pub q: BTreeMap<u32, f64>,
}

impl ObservationParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma_obs2", self.sigma_obs2),
            ("alpha_w", self.alpha_w),
            ("sigma_s2", self.sigma_s2),
            ("sigma_obs2_survey", self.sigma_obs2_survey.unwrap_or(1.0)),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be positive",
                });
            }
        }
        if self.q.values().any(|q| !(*q > 0.0 && q.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "q",
                reason: "catchabilities must be positive",
            });
        }
        Ok(())
    }

    pub fn survey_variance(&self) -> f64 {
        self.sigma_obs2_survey.unwrap_or(self.sigma_obs2)
    }

    pub fn catchability(&self, regime: u32) -> Result<f64> {
        self.q.get(&regime).copied().ok_or(Error::UnknownSurveyId(regime))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SurveyRecord {
    pub year: i32,
    pub survey_id: u32,
    pub index_tonnes: f64,
    /// Fraction of the year elapsed at the time of the survey.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct ObservationData {
    /// Observed catch (tonnes) by year.
    pub catches: BTreeMap<i32, f64>,
    pub surveys: Vec<SurveyRecord>,
}

impl ObservationData {
    pub fn is_empty(&self) -> bool {
        self.catches.is_empty() && self.surveys.is_empty()
    }

    pub fn len(&self) -> usize {
        self.catches.len() + self.surveys.len()
    }

    /// Split into the records inside `[first_year, last_year]` and those
    /// outside it.
    pub fn restrict_to_horizon(&self, first_year: i32, last_year: i32) -> (Self, Self) {
        let inside = |y: &i32| (first_year..=last_year).contains(y);
        let mut kept = Self::default();
        let mut dropped = Self::default();
        for (&y, &u) in &self.catches {
            if inside(&y) {
                kept.catches.insert(y, u);
            } else {
                dropped.catches.insert(y, u);
            }
        }
        for r in &self.surveys {
            if inside(&r.year) {
                kept.surveys.push(*r);
            } else {
                dropped.surveys.push(*r);
            }
        }
        (kept, dropped)
    }
}

/// Model-predicted means for each observation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Predictions {
    pub catch: BTreeMap<i32, f64>,
    /// Keyed by `(year, survey_id)`.
    pub survey: BTreeMap<(i32, u32), f64>,
}

/// Individual weight (g) at length `l` (mm).
pub fn weight_at_length(l: f64, p: &ObservationParams) -> f64 {
    p.alpha_w * libm::pow(l, p.beta_w)
}

/// Weights at every class midpoint.
pub fn class_weights(grid: &SizeGrid, p: &ObservationParams) -> Vec<f64> {
    grid.midpoints().iter().map(|&l| weight_at_length(l, p)).collect()
}

pub fn expected_catch_tonnes(n_c: &PopulationState, grid: &SizeGrid, p: &ObservationParams) -> f64 {
    n_c.weighted_sum(&class_weights(grid, p)) / GRAMS_PER_TONNE
}

/// Probit survey selectivity, normalised to 1 at `l_max`.
pub fn survey_selectivity(l: f64, p: &ObservationParams, l_max: f64) -> f64 {
    let sd = libm::sqrt(p.sigma_s2);
    normal_cdf((l - p.l50_s) / sd) / normal_cdf((l_max - p.l50_s) / sd)
}

/// Survey selectivity at every class midpoint, normalised at the last one.
pub fn survey_selectivities(grid: &SizeGrid, p: &ObservationParams) -> Vec<f64> {
    let mids = grid.midpoints();
    let l_max = mids[mids.len() - 1];
    mids.iter().map(|&l| survey_selectivity(l, p, l_max)).collect()
}

/// Expected numbers per class in a survey taken a fraction `delta` into
/// the year.
pub fn expected_survey_numbers(
    n_g: &PopulationState,
    split: &BaranovSplit,
    delta: f64,
    regime: u32,
    grid: &SizeGrid,
    p: &ObservationParams,
) -> Result<PopulationState> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: "must lie in [0, 1]",
        });
    }
    let q = p.catchability(regime)?;
    let sel = survey_selectivities(grid, p);
    let n = n_g
        .as_slice()
        .iter()
        .zip(&sel)
        .zip(&split.pi_s)
        .map(|((&n, &s), &ps)| q * s * n * survival_fraction(ps, delta))
        .collect();
    Ok(PopulationState::from_raw(n))
}

/// `pi_s^delta`, exact at `delta = 0` and `delta = 1`.
#[inline]
pub(crate) fn survival_fraction(pi_s: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        1.0
    } else if delta == 1.0 {
        pi_s
    } else {
        libm::pow(pi_s, delta)
    }
}

pub fn expected_survey_tonnes(n_v: &PopulationState, grid: &SizeGrid, p: &ObservationParams) -> f64 {
    expected_catch_tonnes(n_v, grid, p)
}

/// Sum of independent normal log-densities over all catch and survey
/// records.
pub fn log_likelihood(data: &ObservationData, predicted: &Predictions, p: &ObservationParams) -> Result<f64> {
    let mut ll = 0.0;
    for (&year, &u) in &data.catches {
        let mu = predicted
            .catch
            .get(&year)
            .ok_or_else(|| Error::MissingPrediction(format!("catch in {year}")))?;
        ll += ln_normal_pdf(u, *mu, p.sigma_obs2);
    }
    let survey_var = p.survey_variance();
    for r in &data.surveys {
        let mu = predicted.survey.get(&(r.year, r.survey_id)).ok_or_else(|| {
            Error::MissingPrediction(format!("survey {} in {}", r.survey_id, r.year))
        })?;
        ll += ln_normal_pdf(r.index_tonnes, *mu, survey_var);
    }
    Ok(ll)
}

/// Draw a normal observation around `mean`, truncated at zero. Returns the
/// value and whether truncation happened.
pub fn simulate_observation<R: Rng + ?Sized>(mean: f64, variance: f64, rng: &mut R) -> (f64, bool) {
    let v = mean + libm::sqrt(variance) * standard_normal(rng);
    if v < 0.0 {
        (0.0, true)
    } else {
        (v, false)
    }
}
