//! Von Bertalanffy growth between length classes.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{Mode, PopulationState, SizeGrid};
use crate::math::normal_interval_prob;
use crate::sampling::{as_count, multinomial_into};
use crate::{Error, Result};

/// Growth parameters: asymptotic mean length `l_inf` and its standard
/// deviation `sigma_l_inf` (mm), growth rate `k` (1/year) and length at age
/// zero `l0` (mm).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GrowthParams {
    pub l_inf: f64,
    pub sigma_l_inf: f64,
    pub k: f64,
    pub l0: f64,
}

impl GrowthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason| Err(Error::InvalidParameter { name, reason });
        if !(self.l_inf > 0.0 && self.l_inf.is_finite()) {
            return bad("l_inf", "must be positive");
        }
        if !(self.sigma_l_inf > 0.0 && self.sigma_l_inf.is_finite()) {
            return bad("sigma_l_inf", "must be positive");
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad("k", "must be positive");
        }
        if !(self.l0 >= 0.0 && self.l0.is_finite()) {
            return bad("l0", "must be non-negative");
        }
        Ok(())
    }

    /// One-year growth increment standard deviation `sigma_L`.
    pub fn increment_sd(&self) -> f64 {
        let var = self.sigma_l_inf * self.sigma_l_inf * -libm::expm1(-2.0 * self.k);
        libm::sqrt(var)
    }
}

/// Mean and standard deviation of length one year after `from_length`.
pub fn growth_moments(from_length: f64, p: &GrowthParams) -> (f64, f64) {
    let mu = (p.l_inf - from_length) * -libm::expm1(-p.k) + from_length;
    (mu, p.increment_sd())
}

/// Row-stochastic `m x m` matrix of class-to-class growth probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthMatrix {
    classes: usize,
    g: Vec<f64>,
}

impl GrowthMatrix {
    /// Build from row-major entries. Rows are checked for stochasticity.
    pub fn from_rows(classes: usize, g: Vec<f64>) -> Result<Self> {
        if g.len() != classes * classes {
            return Err(Error::DimensionMismatch {
                expected: classes * classes,
                got: g.len(),
            });
        }
        for (i, row) in g.chunks(classes).enumerate() {
            let s: f64 = row.iter().sum();
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || libm::fabs(s - 1.0) > 1e-12 {
                return Err(Error::DegenerateGrowth { row: i });
            }
        }
        Ok(Self { classes, g })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.g[i * self.classes..(i + 1) * self.classes]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.classes + j]
    }

    /// Row vector product `n * G` written into `out`.
    pub fn left_multiply(&self, n: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &ni) in n.iter().enumerate() {
            if ni == 0.0 {
                continue;
            }
            for (o, &gij) in out.iter_mut().zip(self.row(i)) {
                *o += ni * gij;
            }
        }
    }
}

/// Class probabilities of `N(mu, sigma^2)` truncated to the grid range.
///
/// Mass falling outside the range is absorbed by renormalising, which is
/// equivalent to aggregating it into the end classes in proportion.
fn truncated_normal_row(grid: &SizeGrid, mu: f64, sigma: f64, row: usize, out: &mut [f64]) -> Result<()> {
    let z = |b: f64| (b - mu) / sigma;
    let norm = normal_interval_prob(z(grid.lower()), z(grid.upper()));
    if !(norm > 0.0) {
        return Err(Error::DegenerateGrowth { row });
    }
    for (j, w) in grid.breakpoints().windows(2).enumerate() {
        out[j] = normal_interval_prob(z(w[0]), z(w[1])) / norm;
    }
    // Rounding in the per-class differences can leave the row a few ulps off.
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= s);
    Ok(())
}

pub fn build_growth_matrix(grid: &SizeGrid, p: &GrowthParams) -> Result<GrowthMatrix> {
    p.validate()?;
    let m = grid.classes();
    let mut g = vec![0.0; m * m];
    for (i, &l) in grid.midpoints().iter().enumerate() {
        let (mu, sigma) = growth_moments(l, p);
        truncated_normal_row(grid, mu, sigma, i, &mut g[i * m..(i + 1) * m])?;
    }
    Ok(GrowthMatrix { classes: m, g })
}

/// Proportions of one year's recruits entering each class, from growth of
/// length `l0` over one year.
pub fn recruit_proportions(grid: &SizeGrid, p: &GrowthParams) -> Result<Vec<f64>> {
    p.validate()?;
    let (mu, sigma) = growth_moments(p.l0, p);
    let mut out = vec![0.0; grid.classes()];
    truncated_normal_row(grid, mu, sigma, 0, &mut out)?;
    Ok(out)
}

/// Move individuals between classes according to `g`.
pub fn apply_growth<R: Rng + ?Sized>(
    state: &PopulationState,
    g: &GrowthMatrix,
    mode: Mode,
    rng: &mut R,
) -> Result<PopulationState> {
    let m = g.classes();
    if state.classes() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: state.classes(),
        });
    }
    let mut out = vec![0.0; m];
    match mode {
        Mode::Expected => g.left_multiply(state.as_slice(), &mut out),
        Mode::Stochastic => {
            for (i, &n) in state.as_slice().iter().enumerate() {
                let count = as_count(n).ok_or(Error::NonIntegerState { class: i, value: n })?;
                multinomial_into(count, g.row(i), rng, &mut out);
            }
        }
    }
    Ok(PopulationState::from_raw(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> GrowthParams {
        GrowthParams {
            l_inf: 27.0,
            sigma_l_inf: 0.5,
            k: 0.45,
            l0: 0.0,
        }
    }

    #[test]
    fn moments_match_direct_evaluation() {
        let p = params();
        let (mu, sigma) = growth_moments(15.5, &p);
        assert_abs_diff_eq!(mu, 19.667_276_256_349_607, epsilon = 1e-12);
        assert_abs_diff_eq!(sigma * sigma, 0.148_357_585_064_850_22, epsilon = 1e-14);
        let (fixed, _) = growth_moments(27.0, &p);
        assert_eq!(fixed, 27.0);
    }

    // Truncated-normal class probabilities by numerical quadrature of the
    // normal density (mpmath, 40 digits), row for class [15, 16).
    const ROW_15_ORACLE: [f64; 24] = [
        4.031_498_672_901_682_6e-169,
        2.577_432_396_220_171e-139,
        1.968_650_223_595_544_5e-112,
        1.801_249_593_987_433_8e-88,
        1.981_616_405_034_486_6e-67,
        2.635_399_172_596_926e-49,
        4.272_502_562_903_711e-34,
        8.564_842_920_663_393e-22,
        2.181_512_587_545_313_5e-12,
        7.501_231_255_556_328e-06,
        0.041_592_753_394_809_93,
        0.764_559_449_032_363_7,
        0.193_570_281_823_934_7,
        0.000_270_013_819_077_441_55,
        6.963_771_385_165_913e-10,
        2.517_923_205_338_22e-18,
        1.173_846_671_809_365_3e-29,
        6.815_023_615_200_005e-44,
        4.841_909_518_912_169e-61,
        4.168_465_911_383_568_3e-81,
        4.321_744_731_223_249e-104,
        5.373_367_759_675_094_6e-130,
        7.988_108_289_316_528e-159,
        1.416_786_211_178_984e-190,
    ];

    #[test]
    fn growth_row_matches_quadrature_oracle() {
        let grid = SizeGrid::shrimp_default();
        let g = build_growth_matrix(&grid, &params()).unwrap();
        let row = g.row(7);
        for (&got, &want) in row.iter().zip(ROW_15_ORACLE.iter()) {
            assert_relative_eq!(got, want, max_relative = 1e-9, epsilon = 1e-15);
        }
        // mass within mu +/- 3 sigma: classes [18,19) .. [21,22)
        let mass: f64 = row[10..14].iter().sum();
        assert!(mass > 0.999_99);
    }

    #[test]
    fn rows_are_stochastic() {
        let grid = SizeGrid::shrimp_default();
        let g = build_growth_matrix(&grid, &params()).unwrap();
        for i in 0..24 {
            let s: f64 = g.row(i).iter().sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn point_mass_limit() {
        let grid = SizeGrid::shrimp_default();
        let p = GrowthParams {
            sigma_l_inf: 1e-6,
            ..params()
        };
        let g = build_growth_matrix(&grid, &p).unwrap();
        for (i, &l) in grid.midpoints().iter().enumerate() {
            let (mu, _) = growth_moments(l, &p);
            let j = grid.class_of(mu).unwrap();
            assert_abs_diff_eq!(g.get(i, j), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn recruit_proportions_concentrate_near_mu0() {
        let grid = SizeGrid::shrimp_default();
        let phi = recruit_proportions(&grid, &params()).unwrap();
        assert_abs_diff_eq!(phi.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        // quadrature oracle, first four classes
        let oracle = [
            0.020_895_649_795_839_282,
            0.691_597_546_297_044_8,
            0.286_709_594_292_768_3,
            0.000_797_205_235_021_771_3,
        ];
        for (got, want) in phi.iter().zip(oracle) {
            assert_relative_eq!(*got, want, max_relative = 1e-9);
        }
        assert!(phi[..5].iter().sum::<f64>() > 1.0 - 1e-12);

        let sharp = GrowthParams {
            sigma_l_inf: 1e-6,
            ..params()
        };
        let phi = recruit_proportions(&grid, &sharp).unwrap();
        // mu0 = 9.784...
        assert_abs_diff_eq!(phi[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_when_grid_misses_distribution() {
        let grid = SizeGrid::uniform(100.0, 110.0, 1.0).unwrap();
        let p = GrowthParams {
            sigma_l_inf: 0.01,
            ..params()
        };
        assert!(matches!(
            build_growth_matrix(&grid, &p),
            Err(Error::DegenerateGrowth { .. })
        ));
        assert!(matches!(
            recruit_proportions(&grid, &p),
            Err(Error::DegenerateGrowth { .. })
        ));
    }

    #[test]
    fn expected_growth_is_matrix_product() {
        let mut rows = vec![0.0; 9];
        rows[0] = 0.2;
        rows[1] = 0.8;
        rows[4] = 1.0;
        rows[8] = 1.0;
        let g = GrowthMatrix::from_rows(3, rows).unwrap();
        let state = PopulationState::new(vec![100.0, 0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = apply_growth(&state, &g, Mode::Expected, &mut rng).unwrap();
        assert_eq!(out.as_slice(), &[20.0, 80.0, 0.0]);
    }

    #[test]
    fn stochastic_growth_conserves_and_rejects_fractions() {
        let grid = SizeGrid::shrimp_default();
        let g = build_growth_matrix(&grid, &params()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let state = PopulationState::new((0..24).map(|i| (i * 1000) as f64).collect()).unwrap();
        let out = apply_growth(&state, &g, Mode::Stochastic, &mut rng).unwrap();
        assert_eq!(out.total(), state.total());

        let frac = PopulationState::new(vec![0.5; 24]).unwrap();
        assert!(matches!(
            apply_growth(&frac, &g, Mode::Stochastic, &mut rng),
            Err(Error::NonIntegerState { class: 0, .. })
        ));
    }

    #[test]
    fn stochastic_growth_within_five_sigma_of_expectation() {
        let grid = SizeGrid::shrimp_default();
        let g = build_growth_matrix(&grid, &params()).unwrap();
        let state = PopulationState::new(vec![1e6; 24]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let expected = apply_growth(&state, &g, Mode::Expected, &mut rng).unwrap();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let drawn = apply_growth(&state, &g, Mode::Stochastic, &mut rng).unwrap();
            for j in 0..24 {
                // variance of a sum of independent multinomial components
                let var: f64 = (0..24)
                    .map(|i| 1e6 * g.get(i, j) * (1.0 - g.get(i, j)))
                    .sum();
                let dev = (drawn[j] - expected[j]).abs();
                assert!(dev <= 5.0 * var.sqrt() + 1e-9, "class {j}: {dev} vs sd {}", var.sqrt());
            }
        }
    }
}
