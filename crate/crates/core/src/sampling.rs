//! Random draws shared by the process model and the sampler.

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

/// Draw `count` trials into the categories of `probs`, adding the category
/// counts to `out`.
///
/// Uses the conditional-binomial decomposition, so the draw conserves
/// `count` exactly.
pub fn multinomial_into<R: Rng + ?Sized>(count: u64, probs: &[f64], rng: &mut R, out: &mut [f64]) {
    debug_assert_eq!(probs.len(), out.len());
    let mut remaining = count;
    let mut mass_left = 1.0_f64;
    let last = probs.len().saturating_sub(1);
    for (j, (&p, o)) in probs.iter().zip(out.iter_mut()).enumerate() {
        if remaining == 0 {
            break;
        }
        if j == last {
            *o += remaining as f64;
            break;
        }
        let cond = if mass_left > 0.0 {
            (p / mass_left).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let k = if cond >= 1.0 {
            remaining
        } else if cond <= 0.0 {
            0
        } else {
            // Binomial::new only fails for p outside [0, 1]
            Binomial::new(remaining, cond)
                .map(|b| b.sample(rng))
                .unwrap_or(0)
        };
        *o += k as f64;
        remaining -= k;
        mass_left -= p;
    }
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Counts above this cannot be represented exactly in an `f64`.
pub const MAX_EXACT_COUNT: f64 = 9_007_199_254_740_992.0;

/// Interpret `value` as an exact non-negative integer count.
pub fn as_count(value: f64) -> Option<u64> {
    if (0.0..=MAX_EXACT_COUNT).contains(&value) && libm::trunc(value) == value {
        Some(value as u64)
    } else {
        None
    }
}
