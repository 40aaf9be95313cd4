//! Posterior summaries: means, quantiles, effective sample sizes.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Error, Result};

use super::{AcceptanceStats, PosteriorSample};

/// 5%, 50% and 95%.
pub const DEFAULT_QUANTILES: [f64; 3] = [0.05, 0.5, 0.95];

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// One value per requested quantile.
    pub quantiles: Vec<f64>,
    pub ess: f64,
    /// Potential scale reduction; present with more than one chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_hat: Option<f64>,
}

/// Summary of a per-year series; every vector is indexed by year.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SeriesSummary {
    pub name: String,
    pub years: Vec<i32>,
    pub mean: Vec<f64>,
    /// `quantiles[k][t]` is quantile `k` in year `t`.
    pub quantiles: Vec<Vec<f64>>,
    pub ess: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Summary {
    pub draws: usize,
    pub chains: usize,
    pub quantile_levels: Vec<f64>,
    pub parameters: Vec<ParameterSummary>,
    pub series: Vec<SeriesSummary>,
    /// One entry per chain.
    pub acceptance: Vec<AcceptanceStats>,
}

impl Summary {
    pub fn parameter(&self, name: &str) -> Option<&ParameterSummary> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn series(&self, name: &str) -> Option<&SeriesSummary> {
        self.series.iter().find(|s| s.name == name)
    }
}

/// Sample quantile by linear interpolation between order statistics
/// (Hyndman-Fan type 7). `sorted` must be sorted and non-empty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 {
        x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Effective sample size by Geyer's initial monotone sequence estimator.
/// A constant sample reports its own length.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let autocov = |lag: usize| d[..n - lag].iter().zip(&d[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let c0 = autocov(0);
    if !(c0 > 0.0) || !c0.is_finite() {
        return n as f64;
    }
    let mut sum = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (autocov(lag) + autocov(lag + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        sum += pair;
        prev_pair = pair;
        lag += 2;
    }
    let tau = (2.0 * sum - 1.0).max(1.0 / libm::log10(n as f64));
    n as f64 / tau
}

/// Potential scale reduction factor of several equally long chains.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> Option<f64> {
    let m = chains.len();
    let n = chains.iter().map(Vec::len).min()?;
    if m < 2 || n < 2 {
        return None;
    }
    let stats: Vec<(f64, f64)> = chains.iter().map(|c| mean_var(&c[..n])).collect();
    let w = stats.iter().map(|s| s.1).sum::<f64>() / m as f64;
    let grand = stats.iter().map(|s| s.0).sum::<f64>() / m as f64;
    let b = n as f64 * stats.iter().map(|s| (s.0 - grand) * (s.0 - grand)).sum::<f64>() / (m - 1) as f64;
    if !(w > 0.0) {
        return if b > 0.0 { Some(f64::INFINITY) } else { Some(1.0) };
    }
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    Some(libm::sqrt(var_plus / w))
}

/// Summary of one or more chains over a common parameter layout. Non-finite
/// series values (failed trajectories) are left out.
pub fn summarize_chains(samples: &[PosteriorSample], quantiles: &[f64]) -> Result<Summary> {
    let first = samples.first().ok_or(Error::EmptySample)?;
    if samples.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptySample);
    }
    let describe = |per_chain: &[Vec<f64>]| {
        let finite: Vec<Vec<f64>> = per_chain
            .iter()
            .map(|c| c.iter().copied().filter(|v| v.is_finite()).collect())
            .collect();
        let mut all: Vec<f64> = finite.iter().flatten().copied().collect();
        if all.is_empty() {
            let nan = f64::NAN;
            return (nan, nan, alloc::vec![nan; quantiles.len()], 0.0, None);
        }
        let (mean, var) = mean_var(&all);
        all.sort_by(f64::total_cmp);
        let q = quantiles.iter().map(|p| quantile(&all, *p)).collect();
        let ess = finite.iter().map(|c| effective_sample_size(c)).sum();
        let r_hat = if finite.len() > 1 { gelman_rubin(&finite) } else { None };
        (mean, libm::sqrt(var), q, ess, r_hat)
    };

    let parameters = first
        .parameter_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let per_chain: Vec<Vec<f64>> = samples.iter().map(|s| s.parameter(j)).collect();
            let (mean, sd, quantiles, ess, r_hat) = describe(&per_chain);
            ParameterSummary {
                name: name.clone(),
                mean,
                sd,
                quantiles,
                ess,
                r_hat,
            }
        })
        .collect();

    let years = first.series.first().map_or(0, |s| s.biomass.len());
    let extractors: [(&str, fn(&super::DerivedSeries) -> &Vec<f64>); 3] = [
        ("biomass", |s| &s.biomass),
        ("f_max", |s| &s.f_max),
        ("recruits", |s| &s.recruits),
    ];
    let series = extractors
        .iter()
        .map(|(name, get)| {
            let mut out = SeriesSummary {
                name: name.to_string(),
                years: (0..years).map(|t| first.first_year + t as i32).collect(),
                mean: Vec::with_capacity(years),
                quantiles: alloc::vec![Vec::with_capacity(years); quantiles.len()],
                ess: Vec::with_capacity(years),
            };
            for t in 0..years {
                let per_chain: Vec<Vec<f64>> = samples
                    .iter()
                    .map(|s| s.series.iter().map(|d| get(d)[t]).collect())
                    .collect();
                let (mean, _, q, ess, _) = describe(&per_chain);
                out.mean.push(mean);
                for (k, v) in q.into_iter().enumerate() {
                    out.quantiles[k].push(v);
                }
                out.ess.push(ess);
            }
            out
        })
        .collect();

    Ok(Summary {
        draws: samples.iter().map(PosteriorSample::len).sum(),
        chains: samples.len(),
        quantile_levels: quantiles.to_vec(),
        parameters,
        series,
        acceptance: samples.iter().map(|s| s.acceptance.clone()).collect(),
    })
}

pub fn summarize(sample: &PosteriorSample, quantiles: &[f64]) -> Result<Summary> {
    summarize_chains(core::slice::from_ref(sample), quantiles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{ChainConfig, DerivedSeries, ParameterVector};
    use crate::sampling::standard_normal;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_from(values: &[f64]) -> PosteriorSample {
        PosteriorSample {
            parameter_names: vec!["a".into()],
            first_year: 2000,
            config: ChainConfig::new(values.len() as u64, 0, 1),
            draws: values
                .iter()
                .map(|v| ParameterVector {
                    statics: vec![*v],
                    xi_innovations: vec![0.0],
                    zeta_innovations: vec![0.0],
                })
                .collect(),
            series: values
                .iter()
                .map(|v| DerivedSeries {
                    biomass: vec![*v],
                    f_max: vec![1.0],
                    recruits: vec![f64::NAN],
                })
                .collect(),
            acceptance: AcceptanceStats::default(),
        }
    }

    #[test]
    fn quantile_type_7() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&x, 0.0), 1.0);
        assert_eq!(quantile(&x, 1.0), 4.0);
        assert_abs_diff_eq!(quantile(&x, 0.5), 2.5);
        assert_abs_diff_eq!(quantile(&x, 0.05), 1.15, epsilon = 1e-15);
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn constant_sample() {
        let s = summarize(&sample_from(&[2.5; 40]), &DEFAULT_QUANTILES).unwrap();
        let p = &s.parameters[0];
        assert_eq!(p.mean, 2.5);
        assert!(p.quantiles.iter().all(|q| *q == 2.5));
        assert_eq!(p.ess, 40.0);
        assert_eq!(s.series("biomass").unwrap().years, vec![2000]);
        assert!(s.series("recruits").unwrap().mean[0].is_nan());
    }

    #[test]
    fn empty_sample_fails() {
        assert_eq!(summarize(&sample_from(&[]), &DEFAULT_QUANTILES), Err(Error::EmptySample));
        assert_eq!(summarize_chains(&[], &DEFAULT_QUANTILES), Err(Error::EmptySample));
    }

    #[test]
    fn ess_of_white_noise_is_close_to_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..4000).map(|_| standard_normal(&mut rng)).collect();
        let ess = effective_sample_size(&x);
        assert!((ess / 4000.0 - 1.0).abs() < 0.2, "ess = {ess}");
    }

    #[test]
    fn ess_of_ar1_matches_theory() {
        // AR(1) with phi = 0.8: n (1 - phi) / (1 + phi) = n / 9
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut v = 0.0;
        let x: Vec<f64> = (0..90_000)
            .map(|_| {
                v = 0.8 * v + standard_normal(&mut rng);
                v
            })
            .collect();
        let ess = effective_sample_size(&x);
        assert!((ess / 10_000.0 - 1.0).abs() < 0.2, "ess = {ess}");
    }

    #[test]
    fn gelman_rubin_detects_disagreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut chain = |shift: f64| (0..2000).map(|_| shift + standard_normal(&mut rng)).collect::<Vec<_>>();
        let same = vec![chain(0.0), chain(0.0), chain(0.0)];
        assert!((gelman_rubin(&same).unwrap() - 1.0).abs() < 0.01);
        let apart = vec![chain(0.0), chain(3.0)];
        assert!(gelman_rubin(&apart).unwrap() > 1.5);
        assert_eq!(gelman_rubin(&[vec![1.0, 2.0]]), None);
    }

    #[test]
    fn chains_merge() {
        let a = sample_from(&[1.0, 2.0, 3.0]);
        let b = sample_from(&[4.0, 5.0, 6.0]);
        let s = summarize_chains(&[a, b], &[0.5]).unwrap();
        assert_eq!(s.draws, 6);
        assert_eq!(s.chains, 2);
        assert_abs_diff_eq!(s.parameters[0].mean, 3.5);
        assert_abs_diff_eq!(s.parameters[0].quantiles[0], 3.5);
        assert!(s.parameters[0].r_hat.unwrap() > 1.0);
    }
}
