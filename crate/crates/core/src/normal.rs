//! Standard normal density, distribution and tail helpers.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal density.
#[inline]
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF, computed through `erfc` so both tails keep full
/// relative precision.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `P(Z > x)`.
#[inline]
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Two-sided tail `P(|Z| > x)` for `x >= 0`.
#[inline]
pub fn two_sided_tail(x: f64) -> f64 {
    erfc(x * FRAC_1_SQRT_2)
}
