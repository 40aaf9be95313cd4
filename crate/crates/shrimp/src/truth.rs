//! True-parameter files for simulation and checks.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use shrimp_core::inference::{DerivedSeries, ParameterLayout, ParameterVector};
use shrimp_core::priors::PriorSet;

use crate::error::{Error, Result};

/// Static parameters by name plus the innovation series. Missing
/// innovations are zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_innovations: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_innovations: Option<Vec<f64>>,
    /// The series the parameters produce; written by `simulate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<DerivedSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated_observations: Option<usize>,
}

impl Truth {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("truth serialises");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn from_vector(layout: &ParameterLayout, theta: &ParameterVector) -> Self {
        Self {
            parameters: layout.values_to_map(&theta.statics),
            xi_innovations: Some(theta.xi_innovations.clone()),
            zeta_innovations: Some(theta.zeta_innovations.clone()),
            ..Self::default()
        }
    }

    /// Parameter vector in layout order. Parameters not listed take their
    /// prior median.
    pub fn to_vector(&self, layout: &ParameterLayout, priors: &PriorSet, years: usize) -> Result<ParameterVector> {
        let mut values = BTreeMap::new();
        let mut defaulted = Vec::new();
        for name in layout.names() {
            let v = match self.parameters.get(name) {
                Some(v) => *v,
                None => {
                    let spec = priors
                        .get(name)
                        .ok_or_else(|| Error::Config(format!("no value or prior for `{name}`")))?;
                    defaulted.push(name.as_str());
                    spec.median()
                }
            };
            values.insert(name.clone(), v);
        }
        if !defaulted.is_empty() {
            log::info!("prior medians used for {}", defaulted.join(", "));
        }
        if let Some(extra) = self.parameters.keys().find(|k| layout.index_of(k).is_none()) {
            return Err(Error::Config(format!("truth names unknown parameter `{extra}`")));
        }
        let series = |s: &Option<Vec<f64>>, name: &str| match s {
            None => Ok(vec![0.0; years]),
            Some(v) if v.len() == years => Ok(v.clone()),
            Some(v) => Err(Error::Config(format!("{name} has {} values, horizon has {years} years", v.len()))),
        };
        Ok(ParameterVector {
            statics: layout.values_from_map(&values)?,
            xi_innovations: series(&self.xi_innovations, "xi_innovations")?,
            zeta_innovations: series(&self.zeta_innovations, "zeta_innovations")?,
        })
    }
}
