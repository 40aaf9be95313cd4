//! Run configuration (JSON).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shrimp_core::inference::{ChainConfig, ModelConfig, SurveySchedule, SURVEY_VARIANCE_PARAMETER};
use shrimp_core::model::{MaturitySchedule, Mode, SizeGrid};
use shrimp_core::priors::{default_prior_set_for, PriorSet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub width: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            min: 8.0,
            max: 32.0,
            width: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catch: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survey: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub first_year: i32,
    pub last_year: i32,
    pub grid: GridSpec,
    /// Classes with midpoint above this length are mature.
    pub maturity_threshold: f64,
    pub l0: f64,
    pub xi0: f64,
    pub zeta0: f64,
    /// Survey regimes with a catchability parameter.
    pub survey_ids: Vec<u32>,
    /// When each regime surveys, used by `simulate`.
    pub surveys: Vec<SurveySchedule>,
    pub split_observation_variance: bool,
    /// Replace the default prior of the named parameters.
    pub priors: PriorSet,
    pub chain: ChainConfig,
    pub chains: usize,
    pub data: DataPaths,
    pub mode: Mode,
    pub observation_noise: bool,
    pub quantiles: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            first_year: 1988,
            last_year: 2012,
            grid: GridSpec::default(),
            maturity_threshold: 19.0,
            l0: 0.0,
            xi0: 0.0,
            zeta0: 0.0,
            survey_ids: vec![1, 3, 4],
            surveys: SurveySchedule::shrimp_default(),
            split_observation_variance: false,
            priors: PriorSet::new(),
            chain: ChainConfig::new(1_100_000, 100_000, 100).with_tuning(20_000),
            chains: 1,
            data: DataPaths::default(),
            mode: Mode::Expected,
            observation_noise: true,
            quantiles: shrimp_core::inference::DEFAULT_QUANTILES.to_vec(),
        }
    }
}

impl RunConfig {
    /// Parse and validate a config file. Relative data paths are resolved
    /// against the file's directory and must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: RunConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("config serialises");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.data.catch, &mut self.data.survey].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn years(&self) -> usize {
        (self.last_year - self.first_year + 1).max(0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.last_year < self.first_year {
            return Err(Error::Config(format!(
                "empty horizon {}..{}",
                self.first_year, self.last_year
            )));
        }
        if !(self.grid.width > 0.0) {
            return Err(Error::Config("grid width must be positive".into()));
        }
        self.grid_spec()?;
        if self.chains == 0 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        self.chain.validate()?;
        if self.quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::Config("quantiles must lie in [0, 1]".into()));
        }
        for s in &self.surveys {
            if !self.survey_ids.contains(&s.survey_id) {
                return Err(Error::Config(format!(
                    "survey schedule uses id {} which has no catchability",
                    s.survey_id
                )));
            }
            if !(0.0..=1.0).contains(&s.delta) {
                return Err(Error::Config(format!("survey {} delta must lie in [0, 1]", s.survey_id)));
            }
        }
        for (name, spec) in self.priors.iter() {
            spec.validate()
                .map_err(|e| Error::Config(format!("prior for `{name}`: {e}")))?;
        }
        for p in [&self.data.catch, &self.data.survey].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Config(format!("data file {} does not exist", p.display())));
            }
        }
        self.model_config()?;
        Ok(())
    }

    fn grid_spec(&self) -> Result<SizeGrid> {
        Ok(SizeGrid::uniform(self.grid.min, self.grid.max, self.grid.width)?)
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let grid = self.grid_spec()?;
        let maturity = MaturitySchedule::knife_edge(&grid, self.maturity_threshold);
        let config = ModelConfig {
            grid,
            first_year: self.first_year,
            years: self.years(),
            maturity,
            l0: self.l0,
            xi0: self.xi0,
            zeta0: self.zeta0,
            survey_ids: self.survey_ids.clone(),
            split_observation_variance: self.split_observation_variance,
        };
        config.validate()?;
        Ok(config)
    }

    /// Default priors for the configured surveys, with the overrides
    /// applied.
    pub fn prior_set(&self) -> PriorSet {
        let mut set = default_prior_set_for(&self.survey_ids);
        if self.split_observation_variance {
            let shared = set.get("sigma_obs2").cloned().expect("default set has sigma_obs2");
            set.insert(SURVEY_VARIANCE_PARAMETER, shared);
        }
        set.merge(&self.priors);
        set
    }

    /// Survey schedule restricted to the horizon.
    pub fn schedule(&self) -> Vec<SurveySchedule> {
        self.surveys
            .iter()
            .filter(|s| s.last_year >= self.first_year && s.first_year <= self.last_year)
            .copied()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use shrimp_core::priors::PriorSpec;

    #[test]
    fn default_matches_case_study() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let m = c.model_config().unwrap();
        assert_eq!(m.grid.classes(), 24);
        assert_eq!(m.years, 25);
        assert_eq!(c.chain.retained_count(), 10_000);
        assert_eq!(c.prior_set().len(), 23);
    }

    #[test]
    fn round_trip_is_idempotent() {
        let mut c = RunConfig::default();
        c.priors.insert("gamma_f", PriorSpec::LogNormal { mu: -1.0, sigma2: 0.1 });
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn partial_config_uses_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"first_year": 2000, "last_year": 2004}"#).unwrap();
        assert_eq!(c.years(), 5);
        assert_eq!(c.survey_ids, vec![1, 3, 4]);
        assert!(serde_json::from_str::<RunConfig>(r#"{"frist_year": 1}"#).is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = RunConfig::default();
        c.last_year = 1980;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.grid.width = 0.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.data.catch = Some("/nonexistent/catch.csv".into());
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("/nonexistent/catch.csv"), "{err}");
    }

    #[test]
    fn split_variance_gets_a_prior() {
        let c = RunConfig {
            split_observation_variance: true,
            ..RunConfig::default()
        };
        let set = c.prior_set();
        assert_eq!(set.get(SURVEY_VARIANCE_PARAMETER), set.get("sigma_obs2"));
    }
}
