//! The log-posterior over static parameters and innovation series.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math::ln_normal_pdf;
use crate::model::{
    annual_transition, initial_state, AnnualTransitionRecord, LatentNoise, Mode, ModelSetup,
    PopulationState,
};
use crate::observation::{
    expected_catch_tonnes, expected_survey_numbers, expected_survey_tonnes, log_likelihood,
    ObservationData, Predictions,
};
use crate::priors::{PriorSet, PriorSpec};
use crate::{Error, Result};

use super::evaluator::{Path, StaticCache};
use super::{ModelConfig, ParameterLayout, ParameterVector, StaticParameters};

/// A survey observation resolved against the configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SurveyObs {
    /// Position of the regime in `ModelConfig::survey_ids`.
    pub(crate) slot: usize,
    pub(crate) index: f64,
    pub(crate) delta: f64,
}

/// Model configuration, priors and data, ready for evaluation.
#[derive(Debug, Clone)]
pub struct Posterior {
    config: ModelConfig,
    layout: ParameterLayout,
    priors: Vec<PriorSpec>,
    data: ObservationData,
    dropped: ObservationData,
    catch_by_year: Vec<Option<f64>>,
    surveys_by_year: Vec<Vec<SurveyObs>>,
}

/// Expected-mode trajectory: `states[0]` is the initial state and
/// `states[t]` the state after period `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<PopulationState>,
    pub records: Vec<AnnualTransitionRecord>,
}

/// Per-year series reported for every posterior draw.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct DerivedSeries {
    /// Total biomass (tonnes) of the state at the end of each period.
    pub biomass: Vec<f64>,
    pub f_max: Vec<f64>,
    pub recruits: Vec<f64>,
}

impl DerivedSeries {
    pub(crate) fn missing(years: usize) -> Self {
        let nan = alloc::vec![f64::NAN; years];
        Self {
            biomass: nan.clone(),
            f_max: nan.clone(),
            recruits: nan,
        }
    }
}

impl Posterior {
    /// Records outside the horizon are set aside (see [`Posterior::dropped`]).
    pub fn new(config: ModelConfig, data: &ObservationData, priors: &PriorSet) -> Result<Self> {
        config.validate()?;
        let layout = ParameterLayout::new(&config);
        let priors = priors.ordered(layout.names())?;
        let (data, dropped) = data.restrict_to_horizon(config.first_year, config.last_year());

        let mut catch_by_year = alloc::vec![None; config.years];
        for (&year, &u) in &data.catches {
            if !u.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "catch",
                    reason: "observations must be finite",
                });
            }
            catch_by_year[(year - config.first_year) as usize] = Some(u);
        }
        let mut surveys_by_year = alloc::vec![Vec::new(); config.years];
        for r in &data.surveys {
            let slot = config
                .survey_ids
                .iter()
                .position(|id| *id == r.survey_id)
                .ok_or(Error::UnknownSurveyId(r.survey_id))?;
            if !(0.0..=1.0).contains(&r.delta) {
                return Err(Error::InvalidParameter {
                    name: "delta",
                    reason: "must lie in [0, 1]",
                });
            }
            if !r.index_tonnes.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "index_tonnes",
                    reason: "observations must be finite",
                });
            }
            surveys_by_year[(r.year - config.first_year) as usize].push(SurveyObs {
                slot,
                index: r.index_tonnes,
                delta: r.delta,
            });
        }
        Ok(Self {
            config,
            layout,
            priors,
            data,
            dropped,
            catch_by_year,
            surveys_by_year,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &ParameterLayout {
        &self.layout
    }

    /// Priors in layout order.
    pub fn priors(&self) -> &[PriorSpec] {
        &self.priors
    }

    /// Data inside the horizon.
    pub fn data(&self) -> &ObservationData {
        &self.data
    }

    /// Records that fell outside the horizon.
    pub fn dropped(&self) -> &ObservationData {
        &self.dropped
    }

    pub fn has_data(&self) -> bool {
        !self.data.is_empty()
    }

    pub fn years(&self) -> usize {
        self.config.years
    }

    pub(crate) fn catch_at(&self, year_index: usize) -> Option<f64> {
        self.catch_by_year[year_index]
    }

    pub(crate) fn surveys_at(&self, year_index: usize) -> &[SurveyObs] {
        &self.surveys_by_year[year_index]
    }

    fn check_dims(&self, theta: &ParameterVector) -> Result<()> {
        if theta.statics.len() != self.layout.len() {
            return Err(Error::DimensionMismatch {
                expected: self.layout.len(),
                got: theta.statics.len(),
            });
        }
        for series in [&theta.xi_innovations, &theta.zeta_innovations] {
            if series.len() != self.config.years {
                return Err(Error::DimensionMismatch {
                    expected: self.config.years,
                    got: series.len(),
                });
            }
        }
        if !theta.is_finite() {
            return Err(Error::NumericalFailure("non-finite parameter vector".into()));
        }
        Ok(())
    }

    pub fn unpack(&self, statics: &[f64]) -> StaticParameters {
        self.layout.unpack(statics, &self.config)
    }

    /// Valid typed parameters, or `None` when the statics do not describe
    /// a valid model.
    fn valid_statics(&self, statics: &[f64]) -> Option<StaticParameters> {
        let p = self.unpack(statics);
        p.model.validate(&self.config.grid).ok()?;
        p.observation.validate().ok()?;
        Some(p)
    }

    /// Sum of prior log-densities; `-inf` off-support.
    pub fn log_prior(&self, statics: &[f64]) -> f64 {
        self.priors
            .iter()
            .zip(statics)
            .map(|(spec, &x)| spec.log_density(x))
            .sum()
    }

    /// Log-density of the innovations under `N(0, (1 - phi^2) sigma^2)`.
    pub fn log_innovation_density(&self, theta: &ParameterVector) -> f64 {
        let Some(p) = self.valid_statics(&theta.statics) else {
            return f64::NEG_INFINITY;
        };
        let v_f = p.model.mortality.innovation_variance();
        let v_r = p.model.recruitment.innovation_variance();
        let f: f64 = theta.xi_innovations.iter().map(|e| ln_normal_pdf(*e, 0.0, v_f)).sum();
        let r: f64 = theta.zeta_innovations.iter().map(|u| ln_normal_pdf(*u, 0.0, v_r)).sum();
        f + r
    }

    /// Expected-mode trajectory from the uniform initial state.
    pub fn trajectory(&self, theta: &ParameterVector) -> Result<Trajectory> {
        self.check_dims(theta)?;
        let p = self.unpack(&theta.statics);
        let setup = ModelSetup::new(&self.config.grid, &p.model)?;
        let noise = LatentNoise::from_innovations(
            &theta.xi_innovations,
            &theta.zeta_innovations,
            p.model.mortality.phi_f,
            p.model.recruitment.phi_r,
            self.config.xi0,
            self.config.zeta0,
        );
        // expected mode draws nothing
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut states = Vec::with_capacity(self.config.years + 1);
        let mut records = Vec::with_capacity(self.config.years);
        states.push(initial_state(p.model.recruitment.k_cap, self.config.grid.classes())?);
        for t in 1..=self.config.years {
            let (next, record) =
                annual_transition(&states[t - 1], t, &setup, &noise, Mode::Expected, &mut rng)?;
            states.push(next);
            records.push(record);
        }
        Ok(Trajectory { states, records })
    }

    /// Predicted catch for every modelled year and predicted survey index
    /// for each `(year, survey_id, delta)` requested.
    pub fn predictions(
        &self,
        theta: &ParameterVector,
        surveys: &[(i32, u32, f64)],
    ) -> Result<Predictions> {
        let traj = self.trajectory(theta)?;
        let p = self.unpack(&theta.statics);
        p.observation.validate()?;
        let grid = &self.config.grid;
        let mut pred = Predictions::default();
        for (t, rec) in traj.records.iter().enumerate() {
            let year = self.config.first_year + t as i32;
            pred.catch.insert(year, expected_catch_tonnes(&rec.n_c, grid, &p.observation));
        }
        for &(year, id, delta) in surveys {
            let t = self.config.year_index(year).ok_or_else(|| {
                Error::MissingPrediction(alloc::format!("survey {id} in {year} is outside the horizon"))
            })?;
            let rec = &traj.records[t];
            let n_v = expected_survey_numbers(&rec.n_g, &rec.split, delta, id, grid, &p.observation)?;
            pred.survey.insert((year, id), expected_survey_tonnes(&n_v, grid, &p.observation));
        }
        Ok(pred)
    }

    /// Gaussian log-likelihood of the data given the expected trajectory.
    pub fn log_likelihood(&self, theta: &ParameterVector) -> Result<f64> {
        if !self.has_data() {
            return Ok(0.0);
        }
        let requests: Vec<_> = self
            .data
            .surveys
            .iter()
            .map(|r| (r.year, r.survey_id, r.delta))
            .collect();
        let pred = self.predictions(theta, &requests)?;
        let p = self.unpack(&theta.statics);
        let ll = log_likelihood(&self.data, &pred, &p.observation)?;
        if ll.is_finite() {
            Ok(ll)
        } else {
            Err(Error::NumericalFailure("non-finite log-likelihood".into()))
        }
    }

    /// Log prior plus innovation densities plus log-likelihood.
    ///
    /// `-inf` for statics off the prior support or not forming a valid
    /// model; [`Error::NumericalFailure`] when the trajectory breaks down.
    pub fn log_posterior(&self, theta: &ParameterVector) -> Result<f64> {
        self.check_dims(theta)?;
        let lp = self.log_prior(&theta.statics);
        if lp == f64::NEG_INFINITY {
            return Ok(lp);
        }
        let li = self.log_innovation_density(theta);
        if li == f64::NEG_INFINITY {
            return Ok(li);
        }
        Ok(lp + li + self.log_likelihood(theta)?)
    }

    /// Biomass, `F^max` and total recruits per modelled year.
    pub fn derived_series(&self, theta: &ParameterVector) -> Result<DerivedSeries> {
        let traj = self.trajectory(theta)?;
        let p = self.unpack(&theta.statics);
        let grid = &self.config.grid;
        let biomass = traj.states[1..]
            .iter()
            .map(|n| expected_catch_tonnes(n, grid, &p.observation))
            .collect();
        Ok(DerivedSeries {
            biomass,
            f_max: traj.records.iter().map(|r| r.f_max).collect(),
            recruits: traj.records.iter().map(|r| r.recruits_total).collect(),
        })
    }

    /// The sampler's evaluation of the same series, from standardised
    /// innovations.
    pub(crate) fn fast_series(&self, statics: &[f64], z_eps: &[f64], z_ups: &[f64]) -> Option<DerivedSeries> {
        let p = self.valid_statics(statics)?;
        let cache = StaticCache::new(self, &p)?;
        let mut path = Path::new(self.config.grid.classes(), self.config.years);
        if !path.run_all(self, &cache, z_eps, z_ups) {
            return None;
        }
        Some(DerivedSeries {
            biomass: path.biomass(&cache),
            f_max: path.f_max.clone(),
            recruits: path.recruits.clone(),
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::observation::SurveyRecord;
    use crate::priors::default_prior_set;
    use alloc::vec;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    pub(crate) fn median_theta(post: &Posterior) -> ParameterVector {
        ParameterVector {
            statics: post.priors().iter().map(|p| p.median()).collect(),
            xi_innovations: vec![0.0; post.years()],
            zeta_innovations: vec![0.0; post.years()],
        }
    }

    pub(crate) fn synthetic_data(first_year: i32, years: usize) -> ObservationData {
        let mut data = ObservationData::default();
        for t in 0..years {
            let year = first_year + t as i32;
            data.catches.insert(year, 3000.0 + 100.0 * t as f64);
            let id = if t < years / 2 { 1 } else { 4 };
            data.surveys.push(SurveyRecord {
                year,
                survey_id: id,
                index_tonnes: 2000.0,
                delta: 0.5,
            });
        }
        data
    }

    fn posterior(data: &ObservationData) -> Posterior {
        Posterior::new(ModelConfig::shrimp_default(1988, 10), data, &default_prior_set()).unwrap()
    }

    #[test]
    fn empty_data_is_pure_prior() {
        let post = posterior(&ObservationData::default());
        let theta = median_theta(&post);
        let lp = post.log_posterior(&theta).unwrap();
        let expected = post.log_prior(&theta.statics) + post.log_innovation_density(&theta);
        assert_eq!(lp, expected);
        assert!(lp.is_finite());
    }

    #[test]
    fn zero_innovations_give_gaussian_mode() {
        let post = posterior(&ObservationData::default());
        let theta = median_theta(&post);
        let p = post.unpack(&theta.statics);
        let v_f = p.model.mortality.innovation_variance();
        let v_r = p.model.recruitment.innovation_variance();
        let t = post.years() as f64;
        let tau = 2.0 * core::f64::consts::PI;
        let expected = -t * libm::log(libm::sqrt(tau * v_f)) - t * libm::log(libm::sqrt(tau * v_r));
        assert_abs_diff_eq!(post.log_innovation_density(&theta), expected, epsilon = 1e-10);
    }

    #[test]
    fn off_support_is_negative_infinity() {
        let post = posterior(&ObservationData::default());
        let mut theta = median_theta(&post);
        theta.statics[0] = 27.5; // l_inf upper bound
        assert_eq!(post.log_posterior(&theta).unwrap(), f64::NEG_INFINITY);
        let mut theta = median_theta(&post);
        theta.statics[10] = -1.0; // beta_r: inside the normal prior, invalid model
        assert_eq!(post.log_posterior(&theta).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn synthetic_smoke_is_finite() {
        let post = posterior(&synthetic_data(1988, 10));
        let theta = median_theta(&post);
        assert!(post.log_posterior(&theta).unwrap().is_finite());
        assert!(post.log_likelihood(&theta).unwrap() < 0.0);
    }

    #[test]
    fn perturbing_an_innovation_only_changes_later_years() {
        let post = posterior(&ObservationData::default());
        let base = median_theta(&post);
        let mut bumped = base.clone();
        bumped.xi_innovations[4] += 0.3;
        bumped.zeta_innovations[4] -= 0.2;
        let a = post.trajectory(&base).unwrap();
        let b = post.trajectory(&bumped).unwrap();
        for t in 0..=4 {
            assert_eq!(a.states[t], b.states[t]);
        }
        for t in 5..=post.years() {
            assert_ne!(a.states[t], b.states[t]);
        }
    }

    #[test]
    fn derived_series_properties() {
        let post = posterior(&ObservationData::default());
        let theta = median_theta(&post);
        let s = post.derived_series(&theta).unwrap();
        let p = post.unpack(&theta.statics);
        let f0 = libm::exp(p.model.mortality.mu_f());
        assert!(s.f_max.iter().all(|f| *f == f0));
        assert!(s.biomass.iter().all(|b| *b >= 0.0));
        let traj = post.trajectory(&theta).unwrap();
        for (r, rec) in s.recruits.iter().zip(&traj.records) {
            assert_relative_eq!(*r, rec.n_r.total(), max_relative = 1e-12);
        }
    }

    #[test]
    fn fast_path_matches_reference() {
        let post = posterior(&synthetic_data(1988, 10));
        let mut theta = median_theta(&post);
        for t in 0..post.years() {
            theta.xi_innovations[t] = 0.1 * (t as f64 - 4.0);
            theta.zeta_innovations[t] = 0.2 * libm::sin(t as f64);
        }
        let p = post.unpack(&theta.statics);
        let cache = StaticCache::new(&post, &p).unwrap();
        let z_eps: Vec<f64> = theta.xi_innovations.iter().map(|e| e / cache.sd_f).collect();
        let z_ups: Vec<f64> = theta.zeta_innovations.iter().map(|u| u / cache.sd_r).collect();
        let mut path = Path::new(24, post.years());
        assert!(path.run_all(&post, &cache, &z_eps, &z_ups));
        assert_relative_eq!(
            path.log_likelihood(),
            post.log_likelihood(&theta).unwrap(),
            max_relative = 1e-10
        );
        let fast = post.fast_series(&theta.statics, &z_eps, &z_ups).unwrap();
        let slow = post.derived_series(&theta).unwrap();
        for t in 0..post.years() {
            assert_relative_eq!(fast.biomass[t], slow.biomass[t], max_relative = 1e-10);
            assert_relative_eq!(fast.f_max[t], slow.f_max[t], max_relative = 1e-12);
            assert_relative_eq!(fast.recruits[t], slow.recruits[t], max_relative = 1e-10);
        }

        // partial recomputation from a later year
        let mut z2 = z_eps.clone();
        z2[6] += 0.5;
        let mut partial = path.clone();
        assert!(partial.run(&post, &cache, &z2, &z_ups, 7));
        let mut full = Path::new(24, post.years());
        assert!(full.run_all(&post, &cache, &z2, &z_ups));
        assert_eq!(partial.states, full.states);
        assert_eq!(partial.ll, full.ll);
    }

    #[test]
    fn out_of_horizon_records_are_dropped() {
        let mut data = synthetic_data(1988, 10);
        data.catches.insert(1980, 1.0);
        let post = posterior(&data);
        assert_eq!(post.dropped().len(), 1);
        assert_eq!(post.data().len(), 20);
    }

    #[test]
    fn unknown_survey_is_rejected() {
        let mut data = ObservationData::default();
        data.surveys.push(SurveyRecord {
            year: 1990,
            survey_id: 2,
            index_tonnes: 1.0,
            delta: 0.5,
        });
        let err = Posterior::new(ModelConfig::shrimp_default(1988, 10), &data, &default_prior_set());
        assert_eq!(err.unwrap_err(), Error::UnknownSurveyId(2));
    }
}
