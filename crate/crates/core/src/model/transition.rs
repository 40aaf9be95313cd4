//! Composition of the sub-processes into one annual transition.

use alloc::vec::Vec;

use rand::Rng;

use super::growth::{apply_growth, build_growth_matrix, recruit_proportions, GrowthMatrix};
use super::mortality::{apply_mortality, gear_selectivity, BaranovSplit};
use super::recruitment::beverton_holt;
use super::{
    GrowthParams, MaturitySchedule, Mode, MortalityParams, PopulationState, RecruitmentParams,
    SizeGrid,
};
use crate::sampling::{as_count, multinomial_into};
use crate::{Error, Result};

/// All process-model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub growth: GrowthParams,
    pub mortality: MortalityParams,
    pub recruitment: RecruitmentParams,
    pub maturity: MaturitySchedule,
}

impl ModelParameters {
    pub fn validate(&self, grid: &SizeGrid) -> Result<()> {
        self.growth.validate()?;
        self.mortality.validate()?;
        self.recruitment.validate()?;
        if self.maturity.as_slice().len() != grid.classes() {
            return Err(Error::DimensionMismatch {
                expected: grid.classes(),
                got: self.maturity.as_slice().len(),
            });
        }
        Ok(())
    }
}

/// Quantities that depend only on the grid and the static parameters,
/// computed once and reused for every year.
#[derive(Debug, Clone)]
pub struct ModelSetup {
    pub(crate) grid: SizeGrid,
    pub(crate) params: ModelParameters,
    pub(crate) growth: GrowthMatrix,
    pub(crate) recruit_props: Vec<f64>,
    pub(crate) gear: Vec<f64>,
    /// `maturity_i * alpha_r * l_i^beta_r`
    pub(crate) eggs_per_individual: Vec<f64>,
}

impl ModelSetup {
    pub fn new(grid: &SizeGrid, params: &ModelParameters) -> Result<Self> {
        params.validate(grid)?;
        let growth = build_growth_matrix(grid, &params.growth)?;
        let recruit_props = recruit_proportions(grid, &params.growth)?;
        let gear = grid
            .midpoints()
            .iter()
            .map(|&l| gear_selectivity(l, &params.mortality))
            .collect();
        let eggs_per_individual = grid
            .midpoints()
            .iter()
            .zip(params.maturity.as_slice())
            .map(|(&l, &u)| if u > 0.0 { u * params.recruitment.fecundity(l) } else { 0.0 })
            .collect();
        Ok(Self {
            grid: grid.clone(),
            params: params.clone(),
            growth,
            recruit_props,
            gear,
            eggs_per_individual,
        })
    }

    pub fn grid(&self) -> &SizeGrid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParameters {
        &self.params
    }

    pub fn growth_matrix(&self) -> &GrowthMatrix {
        &self.growth
    }

    pub fn recruit_proportions(&self) -> &[f64] {
        &self.recruit_props
    }

    pub fn gear_selectivity(&self) -> &[f64] {
        &self.gear
    }

    pub(crate) fn eggs(&self, prev: &[f64]) -> f64 {
        prev.iter()
            .zip(&self.eggs_per_individual)
            .map(|(n, e)| n * e)
            .sum()
    }

    /// Total recruits for `eggs` and deviation `zeta`; zero when there are
    /// no eggs.
    pub fn recruits(&self, eggs: f64, zeta: f64) -> f64 {
        let expected = beverton_holt(eggs, &self.params.recruitment);
        if expected > 0.0 {
            let mu = libm::log(expected) - 0.5 * self.params.recruitment.sigma_r2();
            libm::exp(mu + zeta)
        } else {
            0.0
        }
    }

    /// Baranov split for maximum fishing mortality `f_max`.
    pub fn split(&self, f_max: f64) -> BaranovSplit {
        let m = self.params.mortality.gamma_m;
        let n = self.gear.len();
        let mut split = BaranovSplit {
            pi_s: Vec::with_capacity(n),
            pi_c: Vec::with_capacity(n),
            pi_d: Vec::with_capacity(n),
        };
        for &s in &self.gear {
            let (ps, pc, pd) = BaranovSplit::triplet(s * f_max, m);
            split.pi_s.push(ps);
            split.pi_c.push(pc);
            split.pi_d.push(pd);
        }
        split
    }

    /// One period given this year's `F^max` and recruitment deviation.
    pub fn step<R: Rng + ?Sized>(
        &self,
        prev: &PopulationState,
        f_max: f64,
        zeta: f64,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(PopulationState, AnnualTransitionRecord)> {
        let eggs = self.eggs(prev.as_slice());
        let n_g = apply_growth(prev, &self.growth, mode, rng)?;
        let split = self.split(f_max);
        let (n_s, n_c, n_d) = apply_mortality(&n_g, &split, mode, rng)?;
        let recruits_total = self.recruits(eggs, zeta);
        let n_r = match mode {
            Mode::Expected => PopulationState::from_raw(
                self.recruit_props.iter().map(|p| recruits_total * p).collect(),
            ),
            Mode::Stochastic => {
                let count = libm::round(recruits_total);
                let count = as_count(count).ok_or_else(|| {
                    Error::NumericalFailure(alloc::format!("recruit count {recruits_total}"))
                })?;
                let mut out = alloc::vec![0.0; self.recruit_props.len()];
                multinomial_into(count, &self.recruit_props, rng, &mut out);
                PopulationState::from_raw(out)
            }
        };
        let next = n_s.add(&n_r);
        if !next.is_valid() {
            return Err(Error::NumericalFailure(alloc::format!(
                "non-finite state (F^max = {f_max}, R = {recruits_total})"
            )));
        }
        let record = AnnualTransitionRecord {
            n_g,
            n_s,
            n_c,
            n_d,
            n_r,
            split,
            eggs,
            f_max,
            recruits_total,
        };
        Ok((next, record))
    }
}

/// AR(1) deviation series for `log F^max` (`xi`) and log recruitment
/// (`zeta`), one entry per modelled year, plus the pre-sample states.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LatentNoise {
    pub xi: Vec<f64>,
    pub zeta: Vec<f64>,
    pub xi0: f64,
    pub zeta0: f64,
}

impl LatentNoise {
    pub fn zeros(years: usize) -> Self {
        Self {
            xi: alloc::vec![0.0; years],
            zeta: alloc::vec![0.0; years],
            xi0: 0.0,
            zeta0: 0.0,
        }
    }

    /// Accumulate innovation series through the AR(1) recursions.
    pub fn from_innovations(
        eps: &[f64],
        ups: &[f64],
        phi_f: f64,
        phi_r: f64,
        xi0: f64,
        zeta0: f64,
    ) -> Self {
        let accumulate = |innov: &[f64], phi: f64, start: f64| {
            let mut prev = start;
            innov
                .iter()
                .map(|e| {
                    prev = phi * prev + e;
                    prev
                })
                .collect::<Vec<_>>()
        };
        Self {
            xi: accumulate(eps, phi_f, xi0),
            zeta: accumulate(ups, phi_r, zeta0),
            xi0,
            zeta0,
        }
    }

    pub fn years(&self) -> usize {
        self.xi.len().min(self.zeta.len())
    }
}

/// Every intermediate of one annual transition.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnualTransitionRecord {
    pub n_g: PopulationState,
    pub n_s: PopulationState,
    pub n_c: PopulationState,
    pub n_d: PopulationState,
    pub n_r: PopulationState,
    pub split: BaranovSplit,
    pub eggs: f64,
    pub f_max: f64,
    pub recruits_total: f64,
}

/// Uniform initial state with `k_cap / m` individuals per class.
pub fn initial_state(k_cap: f64, classes: usize) -> Result<PopulationState> {
    if !(k_cap > 0.0 && k_cap.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "k_cap",
            reason: "must be positive",
        });
    }
    if classes < 2 {
        return Err(Error::InvalidGrid("at least two classes are required"));
    }
    Ok(PopulationState::from_raw(alloc::vec![k_cap / classes as f64; classes]))
}

/// Transition `N_{t-1} -> N_t` for period `t` (1-based).
pub fn annual_transition<R: Rng + ?Sized>(
    prev: &PopulationState,
    t: usize,
    setup: &ModelSetup,
    noise: &LatentNoise,
    mode: Mode,
    rng: &mut R,
) -> Result<(PopulationState, AnnualTransitionRecord)> {
    if t == 0 || t > noise.years() {
        return Err(Error::NoiseTooShort {
            available: noise.years(),
            requested: t,
        });
    }
    if prev.classes() != setup.grid.classes() {
        return Err(Error::DimensionMismatch {
            expected: setup.grid.classes(),
            got: prev.classes(),
        });
    }
    let f_max = libm::exp(setup.params.mortality.mu_f() + noise.xi[t - 1]);
    setup.step(prev, f_max, noise.zeta[t - 1], mode, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_growth_matrix, fishing_mortality_step, recruitment_step};
    use alloc::vec;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn prior_mean_params(grid: &SizeGrid) -> ModelParameters {
        ModelParameters {
            growth: GrowthParams {
                l_inf: 27.0,
                sigma_l_inf: 0.5,
                k: 0.45,
                l0: 0.0,
            },
            mortality: MortalityParams {
                gamma_m: 0.75,
                gamma_f: 0.4,
                cv_f: 0.5,
                phi_f: 0.5,
                l50_f: 18.0,
                beta_f: 0.3,
            },
            recruitment: RecruitmentParams {
                alpha_r: libm::exp(-2.0),
                beta_r: 3.0,
                alpha: 0.047_425_873,
                k_cap: libm::exp(23.025),
                cv_r: 0.9,
                phi_r: 0.5,
            },
            maturity: MaturitySchedule::knife_edge(grid, 19.0),
        }
    }

    #[test]
    fn initial_state_is_uniform() {
        let s = initial_state(1e10, 24).unwrap();
        assert_relative_eq!(s[0], 4.166_666_666_666_667e8, max_relative = 1e-15);
        assert_relative_eq!(s.total(), 1e10, max_relative = 1e-15);
        assert_eq!(initial_state(2.0, 2).unwrap().as_slice(), &[1.0, 1.0]);
        assert!(initial_state(0.0, 24).is_err());
        assert!(initial_state(1.0, 1).is_err());
    }

    #[test]
    fn empty_population_stays_empty() {
        let grid = SizeGrid::shrimp_default();
        let setup = ModelSetup::new(&grid, &prior_mean_params(&grid)).unwrap();
        let noise = LatentNoise::zeros(3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (next, rec) = annual_transition(&PopulationState::zeros(24), 1, &setup, &noise, Mode::Expected, &mut rng).unwrap();
        assert_eq!(next.total(), 0.0);
        assert_eq!(rec.eggs, 0.0);
        assert_eq!(rec.recruits_total, 0.0);
    }

    #[test]
    fn no_mortality_identity_growth_adds_recruits() {
        let grid = SizeGrid::shrimp_default();
        let mut params = prior_mean_params(&grid);
        params.mortality.gamma_m = 1e-300;
        let mut setup = ModelSetup::new(&grid, &params).unwrap();
        let mut identity = vec![0.0; 24 * 24];
        for i in 0..24 {
            identity[i * 24 + i] = 1.0;
        }
        setup.growth = GrowthMatrix::from_rows(24, identity).unwrap();
        let prev = PopulationState::new((0..24).map(|i| 1e6 * (i + 1) as f64).collect()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (next, rec) = setup.step(&prev, 0.0, 0.0, Mode::Expected, &mut rng).unwrap();
        for i in 0..24 {
            assert_relative_eq!(next[i], prev[i] + rec.n_r[i], max_relative = 1e-12);
        }
        assert!(rec.recruits_total > 0.0);
    }

    #[test]
    fn record_is_consistent_with_sub_operations() {
        let grid = SizeGrid::shrimp_default();
        let params = prior_mean_params(&grid);
        let setup = ModelSetup::new(&grid, &params).unwrap();
        let noise = LatentNoise::from_innovations(&[0.3, -0.1], &[0.2, 0.4], 0.5, 0.5, 0.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let prev = initial_state(params.recruitment.k_cap, 24).unwrap();
        let (next, rec) = annual_transition(&prev, 1, &setup, &noise, Mode::Expected, &mut rng).unwrap();

        let (_, f_max) = fishing_mortality_step(0.0, 0.3, &params.mortality);
        assert_relative_eq!(rec.f_max, f_max, max_relative = 1e-15);
        let eggs = crate::model::egg_production(&prev, &grid, &params.maturity, &params.recruitment);
        assert_relative_eq!(rec.eggs, eggs, max_relative = 1e-12);
        let (_, r) = recruitment_step(eggs, 0.0, 0.2, &params.recruitment).unwrap();
        assert_relative_eq!(rec.recruits_total, r, max_relative = 1e-12);
        assert_relative_eq!(rec.n_r.total(), r, max_relative = 1e-12);

        let g = build_growth_matrix(&grid, &params.growth).unwrap();
        let n_g = apply_growth(&prev, &g, Mode::Expected, &mut rng).unwrap();
        for i in 0..24 {
            assert_relative_eq!(rec.n_g[i], n_g[i], max_relative = 1e-12);
            let parts = rec.n_s[i] + rec.n_c[i] + rec.n_d[i];
            assert_relative_eq!(parts, rec.n_g[i], max_relative = 1e-9);
            assert_abs_diff_eq!(next[i], rec.n_s[i] + rec.n_r[i]);
        }
        assert!(annual_transition(&prev, 3, &setup, &noise, Mode::Expected, &mut rng).is_err());
    }

    #[test]
    fn stochastic_transition_keeps_integer_state() {
        let grid = SizeGrid::shrimp_default();
        let mut params = prior_mean_params(&grid);
        params.recruitment.k_cap = 1e6;
        let setup = ModelSetup::new(&grid, &params).unwrap();
        let noise = LatentNoise::zeros(5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut state = PopulationState::new(vec![50_000.0; 24]).unwrap();
        for t in 1..=5 {
            let (next, rec) = annual_transition(&state, t, &setup, &noise, Mode::Stochastic, &mut rng).unwrap();
            for i in 0..24 {
                assert_eq!(rec.n_s[i] + rec.n_c[i] + rec.n_d[i], rec.n_g[i]);
            }
            assert_eq!(rec.n_g.total(), state.total());
            assert!(next.as_slice().iter().all(|v| v.fract() == 0.0));
            state = next;
        }
    }
}
