use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shrimp_core::math::normal_cdf;
use shrimp_core::priors::{default_prior_set, PriorSpec};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn cdf(p: &PriorSpec, x: f64) -> f64 {
    match *p {
        PriorSpec::LogNormal { mu, sigma2 } => {
            if x <= 0.0 {
                0.0
            } else {
                normal_cdf((x.ln() - mu) / sigma2.sqrt())
            }
        }
        PriorSpec::Normal { mu, sigma2 } => normal_cdf((x - mu) / sigma2.sqrt()),
        PriorSpec::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
        PriorSpec::LogitNormalScaled { mu, sigma2, a, b } => {
            if x <= a {
                0.0
            } else if x >= b {
                1.0
            } else {
                let u = (x - a) / (b - a);
                normal_cdf(((u / (1.0 - u)).ln() - mu) / sigma2.sqrt())
            }
        }
        PriorSpec::ScaledInvChiSquared { nu, s2 } => {
            if x <= 0.0 {
                0.0
            } else {
                ChiSquared::new(nu).unwrap().sf(nu * s2 / x)
            }
        }
    }
}

/// Kolmogorov distribution survival function.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            (if k as i64 % 2 == 1 { 2.0 } else { -2.0 }) * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    s.clamp(0.0, 1.0)
}

fn ks_p_value(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)
}

/// Integral of the density over the support, by the trapezoidal rule on
/// the unconstrained scale.
fn total_mass(p: &PriorSpec) -> f64 {
    let centre = p.to_unconstrained(p.median());
    let half = 40.0 * p.unconstrained_scale();
    let n = 200_000;
    let h = 2.0 * half / n as f64;
    (0..=n)
        .map(|i| {
            let y = centre - half + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            w * (p.log_density(p.from_unconstrained(y)) + p.log_jacobian(y)).exp()
        })
        .sum::<f64>()
        * h
}

#[test]
fn default_priors_integrate_to_one() {
    for (name, p) in default_prior_set().iter() {
        let mass = total_mass(p);
        assert!((mass - 1.0).abs() < 1e-6, "{name}: {mass}");
    }
}

#[test]
fn default_prior_samplers_match_their_densities() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (name, p) in default_prior_set().iter() {
        let xs: Vec<f64> = (0..20_000).map(|_| p.sample(&mut rng)).collect();
        let pv = ks_p_value(xs, |x| cdf(p, x));
        assert!(pv > 1e-3, "{name}: KS p = {pv}");
    }
}

#[test]
fn density_is_derivative_of_cdf() {
    for (name, p) in default_prior_set().iter() {
        for y in [-1.5, -0.3, 0.0, 0.7, 1.9] {
            let y = p.to_unconstrained(p.median()) + y * p.unconstrained_scale();
            let x = p.from_unconstrained(y);
            let h = 1e-5 * x.abs().max(1e-3) * p.unconstrained_scale().min(1.0);
            let numeric = (cdf(p, x + h) - cdf(p, x - h)) / (2.0 * h);
            let analytic = p.log_density(x).exp();
            assert!(
                (numeric - analytic).abs() <= 1e-5 * analytic.max(1e-300),
                "{name} at {x}: {numeric} vs {analytic}"
            );
        }
    }
}

fn any_prior() -> impl Strategy<Value = PriorSpec> {
    prop_oneof![
        (-5.0..5.0f64, 0.01..4.0f64).prop_map(|(mu, sigma2)| PriorSpec::LogNormal { mu, sigma2 }),
        (-50.0..50.0f64, 0.01..100.0f64).prop_map(|(mu, sigma2)| PriorSpec::Normal { mu, sigma2 }),
        (-10.0..10.0f64, 0.01..20.0f64).prop_map(|(a, w)| PriorSpec::Uniform { a, b: a + w }),
        (-3.0..3.0f64, 0.05..4.0f64, -10.0..10.0f64, 0.01..20.0f64)
            .prop_map(|(mu, sigma2, a, w)| PriorSpec::LogitNormalScaled { mu, sigma2, a, b: a + w }),
        (1.0..40.0f64, 0.01..1e6f64).prop_map(|(nu, s2)| PriorSpec::ScaledInvChiSquared { nu, s2 }),
    ]
}

proptest! {
    #[test]
    fn unconstrained_map_round_trips(p in any_prior(), z in -4.0..4.0f64) {
        let y = p.to_unconstrained(p.median()) + z * p.unconstrained_scale();
        let x = p.from_unconstrained(y);
        prop_assert!(p.in_support(x));
        let back = p.to_unconstrained(x);
        prop_assert!((back - y).abs() <= 1e-8 * y.abs().max(1.0), "{} vs {}", back, y);
    }

    #[test]
    fn log_jacobian_matches_finite_difference(p in any_prior(), z in -3.0..3.0f64) {
        let y = p.to_unconstrained(p.median()) + z * p.unconstrained_scale();
        let h = 1e-6;
        let dx = (p.from_unconstrained(y + h) - p.from_unconstrained(y - h)) / (2.0 * h);
        prop_assert!((dx.ln() - p.log_jacobian(y)).abs() < 1e-5);
    }

    #[test]
    fn prior_masses_are_one(p in any_prior()) {
        prop_assert!((total_mass(&p) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn off_support_has_no_density(p in any_prior()) {
        let outside = match p {
            PriorSpec::Normal { .. } => return Ok(()),
            PriorSpec::LogNormal { .. } | PriorSpec::ScaledInvChiSquared { .. } => -1.0,
            PriorSpec::Uniform { b, .. } | PriorSpec::LogitNormalScaled { b, .. } => b + 1.0,
        };
        prop_assert_eq!(p.log_density(outside), f64::NEG_INFINITY);
    }
}
