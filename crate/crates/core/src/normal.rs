//! Standard normal distribution helpers.

use statrs::distribution::{ContinuousCDF, Normal};

fn standard() -> Normal {
    Normal::standard()
}

pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Inverse standard normal CDF.
pub fn quantile(p: f64) -> f64 {
    standard().inverse_cdf(p)
}

/// Two-sided critical value `z` with `P(|Z| <= z) = level`.
pub fn two_sided_z(level: f64) -> f64 {
    quantile(0.5 + 0.5 * level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_quantiles() {
        // Reference values to 16 significant digits.
        assert!((quantile(0.975) - 1.959963984540054).abs() < 1e-12);
        assert!((quantile(0.95) - 1.644853626951472).abs() < 1e-12);
        assert!((quantile(0.995) - 2.575829303548901).abs() < 1e-12);
        assert!((quantile(0.5)).abs() < 1e-15);
        assert!((quantile(1e-10) + 6.361340902404056).abs() < 1e-9);
    }

    #[test]
    fn cdf_matches_reference() {
        assert!((cdf(1.959963984540054) - 0.975).abs() < 1e-15);
        assert!((cdf(-1.0) - 0.15865525393145707).abs() < 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..200 {
            let p = i as f64 / 200.0;
            assert!((cdf(quantile(p)) - p).abs() < 1e-10 * p.min(1.0 - p));
        }
    }
}
