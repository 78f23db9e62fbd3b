//! Standard normal CDF and its log, accurate over the full f64 range.
//!
//! Both are built on `erfc` so the lower tail keeps relative accuracy
//! instead of cancelling to zero. `erfc` itself underflows near q ≈ -37.5,
//! so the log switches to a Mills-ratio asymptotic series below -37.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Φ(q), the standard normal CDF.
pub fn std_normal_cdf(q: f64) -> f64 {
    0.5 * libm::erfc(-q * FRAC_1_SQRT_2)
}

/// ln Φ(q), usable far into both tails.
pub fn log_std_normal_cdf(q: f64) -> f64 {
    if q > 0.0 {
        // ln(1 - Φ(-q)); the small complement keeps full relative accuracy.
        libm::log1p(-0.5 * libm::erfc(q * FRAC_1_SQRT_2))
    } else if q > -37.0 {
        (0.5 * libm::erfc(-q * FRAC_1_SQRT_2)).ln()
    } else {
        // Φ(-x) = φ(x)/x · (1 - 1/x² + 3/x⁴ - 15/x⁶ + ...); six terms are
        // below f64 resolution for x ≥ 37.
        let x = -q;
        let x2 = x * x;
        let mut series = 0.0;
        let mut term = 1.0;
        let mut sign = -1.0;
        let mut double_factorial = 1.0;
        for m in 1..=6u32 {
            double_factorial *= (2 * m - 1) as f64;
            term /= x2;
            series += sign * double_factorial * term;
            sign = -sign;
        }
        -0.5 * x2 - (x * (2.0 * PI).sqrt()).ln() + libm::log1p(series)
    }
}
