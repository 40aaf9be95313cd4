//! Observed minus predicted for catch and survey records.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use shrimp_core::inference::{quantile, ParameterVector, Posterior};
use shrimp_core::observation::{simulate_observation, Predictions};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub year: i32,
    /// `None` for catch records.
    pub survey_id: Option<u32>,
    pub observed: f64,
    /// Expected value (posterior mean of it when predicting from draws).
    pub predicted: f64,
    /// Posterior predictive interval, when predicting from draws.
    pub interval: Option<(f64, f64)>,
}

impl Residual {
    pub fn residual(&self) -> f64 {
        self.observed - self.predicted
    }
}

fn requests(posterior: &Posterior) -> Vec<(i32, u32, f64)> {
    posterior
        .data()
        .surveys
        .iter()
        .map(|r| (r.year, r.survey_id, r.delta))
        .collect()
}

fn residuals_from(posterior: &Posterior, pred: &Predictions) -> Vec<Residual> {
    let data = posterior.data();
    let mut out: Vec<Residual> = data
        .catches
        .iter()
        .map(|(&year, &u)| Residual {
            year,
            survey_id: None,
            observed: u,
            predicted: pred.catch[&year],
            interval: None,
        })
        .collect();
    out.extend(data.surveys.iter().map(|r| Residual {
        year: r.year,
        survey_id: Some(r.survey_id),
        observed: r.index_tonnes,
        predicted: pred.survey[&(r.year, r.survey_id)],
        interval: None,
    }));
    out
}

/// Residuals at a single parameter vector.
pub fn predict_at(posterior: &Posterior, theta: &ParameterVector) -> Result<Vec<Residual>> {
    let pred = posterior.predictions(theta, &requests(posterior))?;
    Ok(residuals_from(posterior, &pred))
}

/// Residuals against the posterior mean prediction, with `(lower, upper)`
/// quantiles of the posterior predictive distribution.
pub fn predict_posterior<R: Rng + ?Sized>(
    posterior: &Posterior,
    draws: &[ParameterVector],
    interval: (f64, f64),
    rng: &mut R,
) -> Result<Vec<Residual>> {
    if draws.is_empty() {
        return Err(shrimp_core::Error::EmptySample.into());
    }
    let req = requests(posterior);
    let mut means: Option<Vec<Residual>> = None;
    let mut replicates: Vec<Vec<f64>> = Vec::new();
    for theta in draws {
        let pred = posterior.predictions(theta, &req)?;
        let rows = residuals_from(posterior, &pred);
        let obs = posterior.unpack(&theta.statics).observation;
        if replicates.is_empty() {
            replicates = vec![Vec::with_capacity(draws.len()); rows.len()];
        }
        for (rep, row) in replicates.iter_mut().zip(&rows) {
            let var = if row.survey_id.is_some() {
                obs.survey_variance()
            } else {
                obs.sigma_obs2
            };
            rep.push(simulate_observation(row.predicted, var, rng).0);
        }
        match &mut means {
            None => means = Some(rows),
            Some(acc) => {
                for (a, r) in acc.iter_mut().zip(rows) {
                    a.predicted += r.predicted;
                }
            }
        }
    }
    let mut rows = means.unwrap_or_default();
    let n = draws.len() as f64;
    for (row, mut rep) in rows.iter_mut().zip(replicates) {
        row.predicted /= n;
        rep.sort_by(f64::total_cmp);
        row.interval = Some((quantile(&rep, interval.0), quantile(&rep, interval.1)));
    }
    Ok(rows)
}

pub const RESIDUALS_HEADER: &str = "year,survey_id,observed,predicted,residual,lower,upper";

pub fn write_residuals(path: &Path, rows: &[Residual]) -> Result<()> {
    let mut w = std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))?;
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{RESIDUALS_HEADER}")?;
        for r in rows {
            let id = r.survey_id.map(|i| i.to_string()).unwrap_or_default();
            let (lo, hi) = match r.interval {
                Some((lo, hi)) => (lo.to_string(), hi.to_string()),
                None => (String::new(), String::new()),
            };
            writeln!(w, "{},{id},{},{},{},{lo},{hi}", r.year, r.observed, r.predicted, r.residual())?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
