//! Scalar special functions.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

/// `ln(2*pi) / 2`.
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `P(a <= Z < b)` for a standard normal `Z`, evaluated on whichever tail
/// keeps the subtraction away from 1.
pub fn normal_interval_prob(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    if a >= 0.0 {
        normal_cdf(-a) - normal_cdf(-b)
    } else if b <= 0.0 {
        normal_cdf(b) - normal_cdf(a)
    } else {
        1.0 - normal_cdf(a) - normal_cdf(-b)
    }
}

/// Log-density of `N(mean, variance)` at `x`.
pub fn ln_normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let r = x - mean;
    -LN_SQRT_2PI - 0.5 * libm::log(variance) - r * r / (2.0 * variance)
}

pub fn logistic(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + libm::exp(-y))
    } else {
        let e = libm::exp(y);
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    libm::log(p) - libm::log1p(-p)
}

/// `ln(1 + e^y)` without overflow.
pub fn softplus(y: f64) -> f64 {
    if y > 0.0 {
        y + libm::log1p(libm::exp(-y))
    } else {
        libm::log1p(libm::exp(y))
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Trigamma function `psi'(x)` for `x > 0`.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // asymptotic series in 1/x
    acc + inv
        + 0.5 * inv2
        + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)))
}

/// Standard deviation of the logistic distribution with unit scale.
pub const LOGISTIC_SD: f64 = PI / 1.732_050_807_568_877_2;
