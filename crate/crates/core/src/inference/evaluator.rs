//! Allocation-free expected-mode trajectory used inside the sampler.
//!
//! The innovations are carried as standardised values `z` with
//! `eps_t = sd_F z_t`, so a change of the statics rescales every
//! innovation while a change of one year's `z` only touches the years
//! from that one onwards.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::LN_SQRT_2PI;
use crate::model::{BaranovSplit, ModelSetup};
use crate::observation::{class_weights, survey_selectivities, survival_fraction};

use super::posterior::Posterior;
use super::StaticParameters;

/// Quantities depending only on the static parameters.
#[derive(Debug, Clone)]
pub(crate) struct StaticCache {
    pub(crate) setup: ModelSetup,
    /// Individual weight in tonnes per class.
    pub(crate) tonnes: Vec<f64>,
    /// `q s_i w_i / 1e6` per survey regime slot.
    pub(crate) survey_tonnes: Vec<Vec<f64>>,
    pub(crate) mu_f: f64,
    pub(crate) phi_f: f64,
    pub(crate) sd_f: f64,
    pub(crate) phi_r: f64,
    pub(crate) sd_r: f64,
    pub(crate) k_cap: f64,
    catch_var: f64,
    survey_var: f64,
    catch_norm: f64,
    survey_norm: f64,
}

impl StaticCache {
    /// `None` when the parameters are not a valid model.
    pub(crate) fn new(post: &Posterior, p: &StaticParameters) -> Option<Self> {
        p.observation.validate().ok()?;
        let config = post.config();
        let setup = ModelSetup::new(&config.grid, &p.model).ok()?;
        let weights = class_weights(&config.grid, &p.observation);
        let tonnes: Vec<f64> = weights.iter().map(|w| w / 1e6).collect();
        let sel = survey_selectivities(&config.grid, &p.observation);
        let survey_tonnes = config
            .survey_ids
            .iter()
            .map(|id| {
                let q = p.observation.q[id];
                tonnes.iter().zip(&sel).map(|(w, s)| q * s * w).collect()
            })
            .collect();
        let m = &p.model.mortality;
        let r = &p.model.recruitment;
        let catch_var = p.observation.sigma_obs2;
        let survey_var = p.observation.survey_variance();
        let cache = Self {
            mu_f: m.mu_f(),
            phi_f: m.phi_f,
            sd_f: libm::sqrt(m.innovation_variance()),
            phi_r: r.phi_r,
            sd_r: libm::sqrt(r.innovation_variance()),
            k_cap: r.k_cap,
            catch_norm: -LN_SQRT_2PI - 0.5 * libm::log(catch_var),
            survey_norm: -LN_SQRT_2PI - 0.5 * libm::log(survey_var),
            catch_var,
            survey_var,
            setup,
            tonnes,
            survey_tonnes,
        };
        let finite = cache.tonnes.iter().all(|w| w.is_finite())
            && cache.survey_tonnes.iter().flatten().all(|w| w.is_finite())
            && cache.sd_f.is_finite()
            && cache.sd_r.is_finite()
            && cache.mu_f.is_finite();
        finite.then_some(cache)
    }
}

/// One expected-mode trajectory with per-year likelihood contributions.
///
/// Index 0 of `states`, `xi` and `zeta` holds the initial values; index
/// `t` holds the values after period `t`.
#[derive(Debug, Clone)]
pub(crate) struct Path {
    classes: usize,
    pub(crate) states: Vec<f64>,
    pub(crate) xi: Vec<f64>,
    pub(crate) zeta: Vec<f64>,
    /// Indexed by `t - 1`.
    pub(crate) f_max: Vec<f64>,
    pub(crate) recruits: Vec<f64>,
    pub(crate) ll: Vec<f64>,
    n_g: Vec<f64>,
    pi_s: Vec<f64>,
}

impl Path {
    pub(crate) fn new(classes: usize, years: usize) -> Self {
        Self {
            classes,
            states: vec![0.0; (years + 1) * classes],
            xi: vec![0.0; years + 1],
            zeta: vec![0.0; years + 1],
            f_max: vec![0.0; years],
            recruits: vec![0.0; years],
            ll: vec![0.0; years],
            n_g: vec![0.0; classes],
            pi_s: vec![0.0; classes],
        }
    }

    pub(crate) fn years(&self) -> usize {
        self.ll.len()
    }

    pub(crate) fn state(&self, t: usize) -> &[f64] {
        &self.states[t * self.classes..(t + 1) * self.classes]
    }

    /// Total log-likelihood over all years.
    pub(crate) fn log_likelihood(&self) -> f64 {
        self.ll.iter().sum()
    }

    /// Sum of the likelihood contributions from period `t` (1-based) on.
    pub(crate) fn log_likelihood_from(&self, t: usize) -> f64 {
        self.ll[t - 1..].iter().sum()
    }

    /// Copy what period `t` starts from: the state and AR(1) values after
    /// period `t - 1`.
    pub(crate) fn copy_start(&mut self, other: &Path, t: usize) {
        let m = self.classes;
        let at = (t - 1) * m;
        self.states[at..at + m].copy_from_slice(&other.states[at..at + m]);
        self.xi[t - 1] = other.xi[t - 1];
        self.zeta[t - 1] = other.zeta[t - 1];
    }

    /// Copy periods `t..=T` from `other`.
    pub(crate) fn copy_suffix(&mut self, other: &Path, t: usize) {
        let m = self.classes;
        self.states[t * m..].copy_from_slice(&other.states[t * m..]);
        self.xi[t..].copy_from_slice(&other.xi[t..]);
        self.zeta[t..].copy_from_slice(&other.zeta[t..]);
        self.f_max[t - 1..].copy_from_slice(&other.f_max[t - 1..]);
        self.recruits[t - 1..].copy_from_slice(&other.recruits[t - 1..]);
        self.ll[t - 1..].copy_from_slice(&other.ll[t - 1..]);
    }

    /// Start-of-horizon values: uniform `K / m` per class and the
    /// configured pre-sample AR(1) states.
    pub(crate) fn initialise(&mut self, cache: &StaticCache, xi0: f64, zeta0: f64) {
        let m = self.classes;
        let n0 = cache.k_cap / m as f64;
        self.states[..m].iter_mut().for_each(|v| *v = n0);
        self.xi[0] = xi0;
        self.zeta[0] = zeta0;
    }

    /// Recompute periods `from..=T` from the stored period `from - 1`.
    /// Returns `false` if a state or likelihood term is not finite.
    pub(crate) fn run(
        &mut self,
        post: &Posterior,
        cache: &StaticCache,
        z_eps: &[f64],
        z_ups: &[f64],
        from: usize,
    ) -> bool {
        let m = self.classes;
        let setup = &cache.setup;
        let gamma_m = setup.params.mortality.gamma_m;
        let has_data = post.has_data();
        for t in from..=self.years() {
            let (head, tail) = self.states.split_at_mut(t * m);
            let prev = &head[(t - 1) * m..];
            let next = &mut tail[..m];

            let eggs = setup.eggs(prev);
            setup.growth.left_multiply(prev, &mut self.n_g);

            let xi = cache.phi_f * self.xi[t - 1] + cache.sd_f * z_eps[t - 1];
            let f_max = libm::exp(cache.mu_f + xi);
            let zeta = cache.phi_r * self.zeta[t - 1] + cache.sd_r * z_ups[t - 1];
            let recruits = setup.recruits(eggs, zeta);
            self.xi[t] = xi;
            self.zeta[t] = zeta;
            self.f_max[t - 1] = f_max;
            self.recruits[t - 1] = recruits;

            let mut catch = 0.0;
            for i in 0..m {
                let (ps, pc, _) = BaranovSplit::triplet(setup.gear[i] * f_max, gamma_m);
                self.pi_s[i] = ps;
                catch += self.n_g[i] * pc * cache.tonnes[i];
                next[i] = self.n_g[i] * ps + recruits * setup.recruit_props[i];
            }
            if !next.iter().all(|v| v.is_finite() && *v >= 0.0) {
                return false;
            }

            let mut ll = 0.0;
            if has_data {
                let year = t - 1;
                if let Some(obs) = post.catch_at(year) {
                    let r = obs - catch;
                    ll += cache.catch_norm - 0.5 * r * r / cache.catch_var;
                }
                for s in post.surveys_at(year) {
                    let w = &cache.survey_tonnes[s.slot];
                    let mut index = 0.0;
                    for i in 0..m {
                        index += self.n_g[i] * w[i] * survival_fraction(self.pi_s[i], s.delta);
                    }
                    let r = s.index - index;
                    ll += cache.survey_norm - 0.5 * r * r / cache.survey_var;
                }
                if !ll.is_finite() {
                    return false;
                }
            }
            self.ll[t - 1] = ll;
        }
        true
    }

    /// Start-of-horizon initialisation followed by the full horizon.
    pub(crate) fn run_all(
        &mut self,
        post: &Posterior,
        cache: &StaticCache,
        z_eps: &[f64],
        z_ups: &[f64],
    ) -> bool {
        let config = post.config();
        self.initialise(cache, config.xi0, config.zeta0);
        self.run(post, cache, z_eps, z_ups, 1)
    }

    /// Biomass (tonnes) of the state at the end of each period.
    pub(crate) fn biomass(&self, cache: &StaticCache) -> Vec<f64> {
        (1..=self.years())
            .map(|t| {
                self.state(t)
                    .iter()
                    .zip(&cache.tonnes)
                    .map(|(n, w)| n * w)
                    .sum()
            })
            .collect()
    }
}
