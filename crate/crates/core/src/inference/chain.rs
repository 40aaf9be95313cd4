//! Blocked, adaptive random-walk Metropolis-Hastings.
//!
//! Coordinates: the statics on their unconstrained scale (one block) and,
//! per year, the standardised innovations `(z_eps_t, z_ups_t)` (one block
//! each). During tuning every block adapts its proposal scale by
//! Robbins-Monro steps towards the target acceptance rate, and the statics
//! block also learns per-coordinate proposal widths over doubling windows.
//! Both are frozen before the first counted iteration.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::priors::PriorSpec;
use crate::sampling::standard_normal;
use crate::{Error, Result};

use super::evaluator::{Path, StaticCache};
use super::posterior::{DerivedSeries, Posterior};
use super::ParameterVector;

/// Prior-draw attempts before giving up on initialisation.
pub const MAX_INIT_ATTEMPTS: usize = 1000;

const ADAPTATION_DECAY: f64 = 0.6;

fn default_target_acceptance() -> f64 {
    0.234
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChainConfig {
    pub total_iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    /// Adaptive iterations run before the counted ones.
    #[serde(default)]
    pub tuning_iterations: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_target_acceptance")]
    pub target_acceptance: f64,
}

impl ChainConfig {
    pub fn new(total_iterations: u64, burn_in: u64, thin: u64) -> Self {
        Self {
            total_iterations,
            burn_in,
            thin,
            tuning_iterations: 0,
            seed: 0,
            target_acceptance: default_target_acceptance(),
        }
    }

    pub fn with_tuning(mut self, tuning_iterations: u64) -> Self {
        self.tuning_iterations = tuning_iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_iterations == 0 {
            return Err(Error::InvalidChainConfig("total_iterations must be positive"));
        }
        if self.thin == 0 {
            return Err(Error::InvalidChainConfig("thin must be at least 1"));
        }
        if self.burn_in >= self.total_iterations {
            return Err(Error::InvalidChainConfig("burn_in must be below total_iterations"));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::InvalidChainConfig("target_acceptance must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Whether counted iteration `i` (0-based) is kept.
    pub fn is_retained(&self, i: u64) -> bool {
        i >= self.burn_in && (i - self.burn_in + 1).is_multiple_of(self.thin)
    }

    pub fn retained_count(&self) -> u64 {
        self.total_iterations.saturating_sub(self.burn_in) / self.thin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initialization {
    PriorDraw,
    Supplied(ParameterVector),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Tuning,
    Sampling,
}

/// Reported periodically while a chain runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Progress {
    pub phase: Phase,
    pub iteration: u64,
    pub iterations: u64,
    /// Statics acceptance rate so far in this phase.
    pub statics_acceptance: f64,
}

/// Acceptance rates over the counted iterations and the frozen scales.
#[derive(Debug, Clone, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct AcceptanceStats {
    pub statics: f64,
    /// Mean over the yearly innovation blocks.
    pub innovations: f64,
    pub innovations_by_year: Vec<f64>,
    pub statics_scale: f64,
    pub innovation_scales: Vec<f64>,
    /// Proposals rejected because the trajectory broke down.
    pub failed_evaluations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    pub parameter_names: Vec<String>,
    pub first_year: i32,
    pub config: ChainConfig,
    pub draws: Vec<ParameterVector>,
    /// One entry per draw; `NaN` where the trajectory could not be
    /// evaluated.
    pub series: Vec<DerivedSeries>,
    pub acceptance: AcceptanceStats,
}

impl PosteriorSample {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn years(&self) -> usize {
        self.draws.first().map_or(0, |d| d.xi_innovations.len())
    }

    /// Values of static parameter `index` across draws.
    pub fn parameter(&self, index: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d.statics[index]).collect()
    }
}

/// Metropolis-Hastings acceptance probability `min(1, exp(delta))` for a
/// symmetric proposal and log-target difference `delta`.
pub fn acceptance_probability(delta: f64) -> f64 {
    if delta >= 0.0 {
        1.0
    } else if delta.is_nan() {
        0.0
    } else {
        libm::exp(delta)
    }
}

/// Accept with uniform draw `u` in `[0, 1)`.
pub fn accept(delta: f64, u: f64) -> bool {
    u < acceptance_probability(delta)
}

#[inline]
fn ln_std_normal_kernel(z: f64) -> f64 {
    -0.5 * z * z
}

/// Windowed estimation of the per-coordinate posterior spread of the
/// statics, on the unconstrained scale.
#[derive(Debug, Clone)]
struct ScaleAdapter {
    /// Tuning iterations at which a window closes.
    window_ends: Vec<u64>,
    next: usize,
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl ScaleAdapter {
    fn new(dim: usize, tuning: u64) -> Self {
        let mut window_ends = Vec::new();
        if tuning >= 200 {
            let start = tuning * 15 / 100;
            let stop = tuning - tuning / 10;
            let mut width = (3 * dim as u64).max(50);
            let mut end = start + width;
            while end < stop {
                let next_width = width * 2;
                if end + next_width > stop {
                    end = stop;
                }
                window_ends.push(end);
                width = next_width;
                end += width;
            }
            if window_ends.last() != Some(&stop) {
                window_ends.push(stop);
            }
        }
        Self {
            window_ends,
            next: 0,
            count: 0.0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    fn window_start(&self, tuning: u64) -> u64 {
        if self.next == 0 {
            tuning * 15 / 100
        } else {
            self.window_ends[self.next - 1]
        }
    }

    fn observe(&mut self, u: &[f64]) {
        self.count += 1.0;
        for ((m, m2), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(u) {
            let d = x - *m;
            *m += d / self.count;
            *m2 += d * (x - *m);
        }
    }

    /// Regularised standard deviations over the window just closed.
    fn close_window(&mut self, base: &[f64]) -> Vec<f64> {
        let n = self.count;
        let shrink = n / (n + 5.0);
        let sd = self
            .m2
            .iter()
            .zip(base)
            .map(|(m2, b)| {
                let var = shrink * m2 / (n - 1.0).max(1.0) + 1e-3 * (5.0 / (n + 5.0)) * b * b;
                libm::sqrt(var)
            })
            .collect();
        self.next += 1;
        self.count = 0.0;
        self.mean.iter_mut().for_each(|m| *m = 0.0);
        self.m2.iter_mut().for_each(|m| *m = 0.0);
        sd
    }
}

struct Sampler<'a> {
    post: &'a Posterior,
    priors: &'a [PriorSpec],
    has_data: bool,
    target: f64,

    u: Vec<f64>,
    x: Vec<f64>,
    z_eps: Vec<f64>,
    z_ups: Vec<f64>,
    lp_statics: f64,
    cache: Option<StaticCache>,
    path: Path,
    scratch: Path,

    base_scale: Vec<f64>,
    /// Per-coordinate proposal shape of the statics block.
    shape: Vec<f64>,
    log_scale: f64,
    block_log_scales: Vec<f64>,
    statics_updates: u64,
    block_updates: Vec<u64>,

    u_prop: Vec<f64>,
    x_prop: Vec<f64>,

    statics_accepted: u64,
    block_accepted: Vec<u64>,
    failures: u64,
}

impl<'a> Sampler<'a> {
    fn new(post: &'a Posterior, target: f64) -> Self {
        let priors = post.priors();
        let d = priors.len();
        let years = post.years();
        let classes = post.config().grid.classes();
        let base_scale: Vec<f64> = priors.iter().map(|p| p.unconstrained_scale()).collect();
        Self {
            post,
            priors,
            has_data: post.has_data(),
            target,
            u: vec![0.0; d],
            x: vec![0.0; d],
            z_eps: vec![0.0; years],
            z_ups: vec![0.0; years],
            lp_statics: f64::NEG_INFINITY,
            cache: None,
            path: Path::new(classes, years),
            scratch: Path::new(classes, years),
            shape: base_scale.clone(),
            base_scale,
            log_scale: libm::log(2.38 / libm::sqrt(d as f64)),
            block_log_scales: vec![libm::log(2.38 / libm::sqrt(2.0)); years],
            statics_updates: 0,
            block_updates: vec![0; years],
            u_prop: vec![0.0; d],
            x_prop: vec![0.0; d],
            statics_accepted: 0,
            block_accepted: vec![0; years],
            failures: 0,
        }
    }

    /// `log p(x) + log |dx/du|` for the unconstrained statics `u`, writing
    /// the natural-scale values into `x`.
    fn statics_density(priors: &[PriorSpec], u: &[f64], x: &mut [f64]) -> f64 {
        let mut lp = 0.0;
        for ((spec, &y), xv) in priors.iter().zip(u).zip(x.iter_mut()) {
            *xv = spec.from_unconstrained(y);
            lp += spec.log_density(*xv) + spec.log_jacobian(y);
        }
        lp
    }

    /// Cache and (with data) trajectory for statics `x`; `None` if the
    /// model is invalid or breaks down.
    fn evaluate_statics(&mut self, x: &[f64]) -> Option<Option<StaticCache>> {
        let p = self.post.unpack(x);
        p.model.validate(&self.post.config().grid).ok()?;
        p.observation.validate().ok()?;
        if !self.has_data {
            return Some(None);
        }
        let cache = StaticCache::new(self.post, &p)?;
        if !self.scratch.run_all(self.post, &cache, &self.z_eps, &self.z_ups) {
            self.failures += 1;
            return None;
        }
        Some(Some(cache))
    }

    /// Set the state from unconstrained statics and standardised
    /// innovations; `false` when the target is not finite there.
    fn set_state(&mut self, u: Vec<f64>, z_eps: Vec<f64>, z_ups: Vec<f64>) -> bool {
        let mut x = vec![0.0; u.len()];
        let lp = Self::statics_density(self.priors, &u, &mut x);
        if !lp.is_finite() || !z_eps.iter().chain(&z_ups).all(|z| z.is_finite()) {
            return false;
        }
        self.z_eps = z_eps;
        self.z_ups = z_ups;
        let Some(cache) = self.evaluate_statics(&x) else {
            return false;
        };
        if self.has_data && !self.scratch.log_likelihood().is_finite() {
            return false;
        }
        core::mem::swap(&mut self.path, &mut self.scratch);
        self.cache = cache;
        self.u = u;
        self.x = x;
        self.lp_statics = lp;
        true
    }

    fn initialise<R: Rng>(&mut self, init: &Initialization, rng: &mut R) -> Result<()> {
        match init {
            Initialization::PriorDraw => {
                for _ in 0..MAX_INIT_ATTEMPTS {
                    let u: Vec<f64> = self
                        .priors
                        .iter()
                        .map(|p| p.to_unconstrained(p.sample(rng)))
                        .collect();
                    let z_eps = (0..self.z_eps.len()).map(|_| standard_normal(rng)).collect();
                    let z_ups = (0..self.z_ups.len()).map(|_| standard_normal(rng)).collect();
                    if self.set_state(u, z_eps, z_ups) {
                        return Ok(());
                    }
                }
                Err(Error::NonFiniteInit(MAX_INIT_ATTEMPTS))
            }
            Initialization::Supplied(theta) => {
                if theta.statics.len() != self.priors.len() {
                    return Err(Error::DimensionMismatch {
                        expected: self.priors.len(),
                        got: theta.statics.len(),
                    });
                }
                let years = self.z_eps.len();
                if theta.xi_innovations.len() != years || theta.zeta_innovations.len() != years {
                    return Err(Error::DimensionMismatch {
                        expected: years,
                        got: theta.xi_innovations.len().min(theta.zeta_innovations.len()),
                    });
                }
                let u: Vec<f64> = self
                    .priors
                    .iter()
                    .zip(&theta.statics)
                    .map(|(p, &x)| p.to_unconstrained(x))
                    .collect();
                let p = self.post.unpack(&theta.statics);
                let sd_f = libm::sqrt(p.model.mortality.innovation_variance());
                let sd_r = libm::sqrt(p.model.recruitment.innovation_variance());
                let z_eps = theta.xi_innovations.iter().map(|e| e / sd_f).collect();
                let z_ups = theta.zeta_innovations.iter().map(|e| e / sd_r).collect();
                if self.set_state(u, z_eps, z_ups) {
                    Ok(())
                } else {
                    Err(Error::NonFiniteInit(0))
                }
            }
        }
    }

    fn log_likelihood(&self) -> f64 {
        if self.has_data {
            self.path.log_likelihood()
        } else {
            0.0
        }
    }

    /// Log target in sampler coordinates.
    #[cfg(test)]
    fn log_target(&self) -> f64 {
        let z: f64 = self.z_eps.iter().chain(&self.z_ups).map(|z| ln_std_normal_kernel(*z)).sum();
        let norm = -2.0 * self.z_eps.len() as f64 * crate::math::LN_SQRT_2PI;
        self.lp_statics + z + norm + self.log_likelihood()
    }

    fn update_statics<R: Rng>(&mut self, rng: &mut R) -> bool {
        let scale = libm::exp(self.log_scale);
        for ((p, u), s) in self.u_prop.iter_mut().zip(&self.u).zip(&self.shape) {
            *p = u + scale * s * standard_normal(rng);
        }
        let uniform: f64 = rng.random();

        let lp = Self::statics_density(self.priors, &self.u_prop, &mut self.x_prop);
        if !lp.is_finite() {
            return false;
        }
        let x_prop = core::mem::take(&mut self.x_prop);
        let evaluated = self.evaluate_statics(&x_prop);
        self.x_prop = x_prop;
        let Some(cache) = evaluated else {
            return false;
        };
        let ll = if self.has_data { self.scratch.log_likelihood() } else { 0.0 };
        let delta = lp + ll - self.lp_statics - self.log_likelihood();
        if !accept(delta, uniform) {
            return false;
        }
        core::mem::swap(&mut self.u, &mut self.u_prop);
        core::mem::swap(&mut self.x, &mut self.x_prop);
        if self.has_data {
            core::mem::swap(&mut self.path, &mut self.scratch);
        }
        self.cache = cache;
        self.lp_statics = lp;
        true
    }

    /// Update the innovation block of period `t` (1-based).
    fn update_block<R: Rng>(&mut self, t: usize, rng: &mut R) -> bool {
        let scale = libm::exp(self.block_log_scales[t - 1]);
        let old_e = self.z_eps[t - 1];
        let old_u = self.z_ups[t - 1];
        let new_e = old_e + scale * standard_normal(rng);
        let new_u = old_u + scale * standard_normal(rng);
        let uniform: f64 = rng.random();

        let mut delta = ln_std_normal_kernel(new_e) + ln_std_normal_kernel(new_u)
            - ln_std_normal_kernel(old_e)
            - ln_std_normal_kernel(old_u);
        if self.has_data {
            let cache = self.cache.as_ref().expect("cache exists with data");
            self.z_eps[t - 1] = new_e;
            self.z_ups[t - 1] = new_u;
            self.scratch.copy_start(&self.path, t);
            let ok = self.scratch.run(self.post, cache, &self.z_eps, &self.z_ups, t);
            if !ok {
                self.failures += 1;
                self.z_eps[t - 1] = old_e;
                self.z_ups[t - 1] = old_u;
                return false;
            }
            delta += self.scratch.log_likelihood_from(t) - self.path.log_likelihood_from(t);
            if accept(delta, uniform) {
                self.path.copy_suffix(&self.scratch, t);
                true
            } else {
                self.z_eps[t - 1] = old_e;
                self.z_ups[t - 1] = old_u;
                false
            }
        } else if accept(delta, uniform) {
            self.z_eps[t - 1] = new_e;
            self.z_ups[t - 1] = new_u;
            true
        } else {
            false
        }
    }

    fn adapt(log_scale: &mut f64, updates: &mut u64, accepted: bool, target: f64) {
        *updates += 1;
        let gain = libm::pow(*updates as f64, -ADAPTATION_DECAY);
        let a = if accepted { 1.0 } else { 0.0 };
        *log_scale = (*log_scale + gain * (a - target)).clamp(-30.0, 10.0);
    }

    /// One sweep: the statics block then every yearly block in order.
    /// Returns whether the statics move was accepted.
    fn sweep<R: Rng>(&mut self, rng: &mut R, tuning: bool) -> bool {
        let acc = self.update_statics(rng);
        let statics_acc = acc;
        if tuning {
            Self::adapt(&mut self.log_scale, &mut self.statics_updates, acc, self.target);
        } else if acc {
            self.statics_accepted += 1;
        }
        for t in 1..=self.z_eps.len() {
            let acc = self.update_block(t, rng);
            if tuning {
                Self::adapt(
                    &mut self.block_log_scales[t - 1],
                    &mut self.block_updates[t - 1],
                    acc,
                    self.target,
                );
            } else if acc {
                self.block_accepted[t - 1] += 1;
            }
        }
        statics_acc
    }

    fn draw(&self) -> (ParameterVector, DerivedSeries) {
        let p = self.post.unpack(&self.x);
        let sd_f = libm::sqrt(p.model.mortality.innovation_variance());
        let sd_r = libm::sqrt(p.model.recruitment.innovation_variance());
        let theta = ParameterVector {
            statics: self.x.clone(),
            xi_innovations: self.z_eps.iter().map(|z| sd_f * z).collect(),
            zeta_innovations: self.z_ups.iter().map(|z| sd_r * z).collect(),
        };
        let series = match &self.cache {
            Some(cache) => DerivedSeries {
                biomass: self.path.biomass(cache),
                f_max: self.path.f_max.clone(),
                recruits: self.path.recruits.clone(),
            },
            None => self
                .post
                .fast_series(&self.x, &self.z_eps, &self.z_ups)
                .unwrap_or_else(|| DerivedSeries::missing(self.post.years())),
        };
        (theta, series)
    }
}

/// Run one chain.
pub fn run_chain(
    config: &ChainConfig,
    posterior: &Posterior,
    init: &Initialization,
) -> Result<PosteriorSample> {
    run_chain_with_progress(config, posterior, init, &mut |_| {})
}

/// [`run_chain`] reporting progress about a hundred times per phase.
pub fn run_chain_with_progress(
    config: &ChainConfig,
    posterior: &Posterior,
    init: &Initialization,
    progress: &mut dyn FnMut(Progress),
) -> Result<PosteriorSample> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut s = Sampler::new(posterior, config.target_acceptance);
    s.initialise(init, &mut rng)?;

    let tuning = config.tuning_iterations;
    let mut adapter = ScaleAdapter::new(s.u.len(), tuning);
    let mut tuning_accepted = 0u64;
    let every = (tuning / 100).max(1);
    for i in 0..tuning {
        if s.sweep(&mut rng, true) {
            tuning_accepted += 1;
        }
        if adapter.next < adapter.window_ends.len() && i >= adapter.window_start(tuning) {
            adapter.observe(&s.u);
            if i + 1 == adapter.window_ends[adapter.next] {
                s.shape = adapter.close_window(&s.base_scale);
                s.log_scale = libm::log(2.38 / libm::sqrt(s.u.len() as f64));
                s.statics_updates = 0;
            }
        }
        if (i + 1) % every == 0 || i + 1 == tuning {
            progress(Progress {
                phase: Phase::Tuning,
                iteration: i + 1,
                iterations: tuning,
                statics_acceptance: tuning_accepted as f64 / (i + 1) as f64,
            });
        }
    }

    let total = config.total_iterations;
    let capacity = config.retained_count() as usize;
    let mut draws = Vec::with_capacity(capacity);
    let mut series = Vec::with_capacity(capacity);
    let every = (total / 100).max(1);
    for i in 0..total {
        s.sweep(&mut rng, false);
        if config.is_retained(i) {
            let (theta, derived) = s.draw();
            draws.push(theta);
            series.push(derived);
        }
        if (i + 1) % every == 0 || i + 1 == total {
            progress(Progress {
                phase: Phase::Sampling,
                iteration: i + 1,
                iterations: total,
                statics_acceptance: s.statics_accepted as f64 / (i + 1) as f64,
            });
        }
    }

    let n = total as f64;
    let by_year: Vec<f64> = s.block_accepted.iter().map(|a| *a as f64 / n).collect();
    let innovations = if by_year.is_empty() {
        0.0
    } else {
        by_year.iter().sum::<f64>() / by_year.len() as f64
    };
    let acceptance = AcceptanceStats {
        statics: s.statics_accepted as f64 / n,
        innovations,
        innovations_by_year: by_year,
        statics_scale: libm::exp(s.log_scale),
        innovation_scales: s.block_log_scales.iter().map(|l| libm::exp(*l)).collect(),
        failed_evaluations: s.failures,
    };
    Ok(PosteriorSample {
        parameter_names: posterior.layout().names().to_vec(),
        first_year: posterior.config().first_year,
        config: *config,
        draws,
        series,
        acceptance,
    })
}
