use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Variance of the log of a unit exponential variable, `π²/6`.
pub const PI_SQUARED_OVER_6: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

pub fn digamma(x: f64) -> f64 {
    statrs::function::gamma::digamma(x)
}

/// Trigamma function `ψ'(x)` for `x > 0`: upward recurrence then the asymptotic series.
pub fn trigamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 8.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let z = 1.0 / (x * x);
    // 1/x + 1/(2x²) + Σ B_{2k}/x^{2k+1}
    let series = 1.0 / x
        + z / 2.0
        + z / x
            * (1.0 / 6.0
                - z * (1.0 / 30.0
                    - z * (1.0 / 42.0 - z * (1.0 / 30.0 - z * (5.0 / 66.0 - z * 691.0 / 2730.0)))));
    acc + series
}

pub fn standard_normal_pdf(z: f64) -> f64 {
    Normal::standard().pdf(z)
}

pub fn standard_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trigamma_reference_values() {
        // ψ'(1) = π²/6, ψ'(1/2) = π²/2, ψ'(x+1) = ψ'(x) − 1/x²
        assert!((trigamma(1.0) - PI_SQUARED_OVER_6).abs() < 1e-13);
        assert!((trigamma(0.5) - 3.0 * PI_SQUARED_OVER_6).abs() < 1e-12);
        for &x in &[0.3, 2.5, 9.0, 49.0, 1e4] {
            assert!((trigamma(x + 1.0) - (trigamma(x) - 1.0 / (x * x))).abs() < 1e-13 * (1.0 + 1.0 / (x * x)));
        }
    }

    #[test]
    fn digamma_at_one_is_minus_euler_gamma() {
        assert!((digamma(1.0) + EULER_GAMMA).abs() < 1e-12);
    }

    #[test]
    fn normal_quantile() {
        assert!((standard_normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-9);
    }
}
