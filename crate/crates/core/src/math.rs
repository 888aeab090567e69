//! Numerically stable scalar helpers shared by the likelihood and sampler
//! code.

use std::f64::consts::PI;

/// Stable `ln(1 + exp(x))`.
///
/// Uses `ln(1+exp(x)) = max(x, 0) + ln(1 + exp(-|x|))`; the exponential
/// argument is always non-positive, so nothing overflows.
#[inline]
pub fn log1pexp(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Stable logistic function `1 / (1 + exp(-x))`.
///
/// Only `exp(-|x|)` is ever evaluated; the result saturates to 0 or 1 in
/// f64 beyond roughly |x| = 37 without overflowing.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    let recip = 1.0 / (1.0 + e);
    if x >= 0.0 {
        recip
    } else {
        e * recip
    }
}

/// Fused `(ln(1 + exp(x)), sigmoid(x))` sharing a single exponential;
/// algebraically identical to calling [`log1pexp`] and [`sigmoid`].
#[inline]
pub fn log1pexp_and_sigmoid(x: f64) -> (f64, f64) {
    let e = (-x.abs()).exp();
    let log_term = x.max(0.0) + e.ln_1p();
    let recip = 1.0 / (1.0 + e);
    let s = if x >= 0.0 { recip } else { e * recip };
    (log_term, s)
}

/// Log-density of N(0, scale^2) at `x`.
#[inline]
pub fn normal_logpdf_centered(x: f64, scale: f64) -> f64 {
    -0.5 * (2.0 * PI).ln() - scale.ln() - x * x / (2.0 * scale * scale)
}

/// Log-density of the half-normal distribution with the given scale at
/// `x >= 0`: twice the centered normal density, folded onto the positive axis.
#[inline]
pub fn half_normal_logpdf(x: f64, scale: f64) -> f64 {
    0.5 * (2.0 / PI).ln() - scale.ln() - x * x / (2.0 * scale * scale)
}
