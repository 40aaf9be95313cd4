//! Synthetic data from known parameters.

use alloc::vec::Vec;

use rand::Rng;

use crate::model::{
    annual_transition, initial_state, LatentNoise, Mode, ModelSetup, PopulationState,
};
use crate::observation::{
    expected_catch_tonnes, expected_survey_numbers, expected_survey_tonnes,
    simulate_observation, ObservationData, SurveyRecord,
};
use crate::{Error, Result};

use super::{DerivedSeries, ModelConfig, ParameterLayout, ParameterVector};

/// Years in which a survey regime is run, and when in the year.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SurveySchedule {
    pub survey_id: u32,
    pub first_year: i32,
    pub last_year: i32,
    pub delta: f64,
}

impl SurveySchedule {
    /// Regime 1 for 1988-2002, regime 3 for 2004-2005 and regime 4 for
    /// 2006-2012, all at mid-year.
    pub fn shrimp_default() -> Vec<Self> {
        alloc::vec![
            Self { survey_id: 1, first_year: 1988, last_year: 2002, delta: 0.5 },
            Self { survey_id: 3, first_year: 2004, last_year: 2005, delta: 0.5 },
            Self { survey_id: 4, first_year: 2006, last_year: 2012, delta: 0.5 },
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub data: ObservationData,
    /// The true series behind the data.
    pub series: DerivedSeries,
    pub states: Vec<PopulationState>,
    /// Observations that came out negative and were set to zero.
    pub truncated: usize,
}

/// Run the process model at `theta` and observe it through the catch
/// series and the scheduled surveys inside the horizon.
///
/// In stochastic mode the initial state is rounded to whole individuals.
/// Without observation noise the data equal the predicted means.
pub fn simulate_data<R: Rng + ?Sized>(
    config: &ModelConfig,
    theta: &ParameterVector,
    schedule: &[SurveySchedule],
    mode: Mode,
    observation_noise: bool,
    rng: &mut R,
) -> Result<SimulatedData> {
    config.validate()?;
    let layout = ParameterLayout::new(config);
    if theta.statics.len() != layout.len() {
        return Err(Error::DimensionMismatch {
            expected: layout.len(),
            got: theta.statics.len(),
        });
    }
    if theta.xi_innovations.len() < config.years || theta.zeta_innovations.len() < config.years {
        return Err(Error::NoiseTooShort {
            available: theta.xi_innovations.len().min(theta.zeta_innovations.len()),
            requested: config.years,
        });
    }
    for s in schedule {
        if !config.survey_ids.contains(&s.survey_id) {
            return Err(Error::UnknownSurveyId(s.survey_id));
        }
    }
    let p = layout.unpack(&theta.statics, config);
    p.observation.validate()?;
    let setup = ModelSetup::new(&config.grid, &p.model)?;
    let noise = LatentNoise::from_innovations(
        &theta.xi_innovations,
        &theta.zeta_innovations,
        p.model.mortality.phi_f,
        p.model.recruitment.phi_r,
        config.xi0,
        config.zeta0,
    );

    let mut state = initial_state(p.model.recruitment.k_cap, config.grid.classes())?;
    if mode == Mode::Stochastic {
        state = PopulationState::new(state.as_slice().iter().map(|n| libm::round(*n)).collect())?;
    }
    let grid = &config.grid;
    let obs = &p.observation;
    let mut data = ObservationData::default();
    let mut series = DerivedSeries::default();
    let mut states = alloc::vec![state];
    let mut truncated = 0;
    let mut observe = |mean: f64, var: f64, rng: &mut R| {
        if observation_noise {
            let (v, cut) = simulate_observation(mean, var, rng);
            truncated += cut as usize;
            v
        } else {
            mean
        }
    };
    for t in 1..=config.years {
        let year = config.first_year + t as i32 - 1;
        let (next, rec) = annual_transition(&states[t - 1], t, &setup, &noise, mode, rng)?;
        let catch = expected_catch_tonnes(&rec.n_c, grid, obs);
        data.catches.insert(year, observe(catch, obs.sigma_obs2, rng));
        for s in schedule.iter().filter(|s| (s.first_year..=s.last_year).contains(&year)) {
            let n_v = expected_survey_numbers(&rec.n_g, &rec.split, s.delta, s.survey_id, grid, obs)?;
            let index = expected_survey_tonnes(&n_v, grid, obs);
            data.surveys.push(SurveyRecord {
                year,
                survey_id: s.survey_id,
                index_tonnes: observe(index, obs.survey_variance(), rng),
                delta: s.delta,
            });
        }
        series.biomass.push(expected_catch_tonnes(&next, grid, obs));
        series.f_max.push(rec.f_max);
        series.recruits.push(rec.recruits_total);
        states.push(next);
    }
    Ok(SimulatedData {
        data,
        series,
        states,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::Posterior;
    use crate::priors::default_prior_set;
    use alloc::vec;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn truth(config: &ModelConfig) -> ParameterVector {
        let layout = ParameterLayout::new(config);
        let priors = default_prior_set().ordered(layout.names()).unwrap();
        ParameterVector {
            statics: priors.iter().map(|p| p.median()).collect(),
            xi_innovations: vec![0.1; config.years],
            zeta_innovations: vec![-0.1; config.years],
        }
    }

    #[test]
    fn noiseless_data_equal_predictions() {
        let config = ModelConfig::shrimp_default(1988, 25);
        let theta = truth(&config);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sim = simulate_data(&config, &theta, &SurveySchedule::shrimp_default(), Mode::Expected, false, &mut rng)
            .unwrap();
        assert_eq!(sim.data.catches.len(), 25);
        assert_eq!(sim.data.surveys.len(), 15 + 2 + 7);
        let post = Posterior::new(config, &sim.data, &default_prior_set()).unwrap();
        let requests: Vec<_> = sim.data.surveys.iter().map(|r| (r.year, r.survey_id, r.delta)).collect();
        let pred = post.predictions(&theta, &requests).unwrap();
        for (y, u) in &sim.data.catches {
            assert_eq!(pred.catch[y], *u);
        }
        for r in &sim.data.surveys {
            assert_eq!(pred.survey[&(r.year, r.survey_id)], r.index_tonnes);
        }
        let series = post.derived_series(&theta).unwrap();
        for t in 0..25 {
            assert_relative_eq!(series.biomass[t], sim.series.biomass[t], max_relative = 1e-12);
        }
    }

    #[test]
    fn noisy_data_is_reproducible() {
        let config = ModelConfig::shrimp_default(1988, 25);
        let theta = truth(&config);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            simulate_data(&config, &theta, &SurveySchedule::shrimp_default(), Mode::Expected, true, &mut rng)
                .unwrap()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5).data, run(6).data);
    }

    #[test]
    fn stochastic_mode_produces_integer_states() {
        let config = ModelConfig::shrimp_default(1988, 5);
        let theta = truth(&config);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sim = simulate_data(&config, &theta, &[], Mode::Stochastic, false, &mut rng).unwrap();
        assert!(sim.states.iter().all(|s| s.as_slice().iter().all(|n| n.fract() == 0.0)));
    }
}
