//! Special functions not covered by `libm`.

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Digamma function for `x > 0`: recurrence up to `x >= 12`, then the
/// asymptotic series.
pub fn digamma(mut x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    acc + libm::log(x) - 0.5 * inv - series
}
