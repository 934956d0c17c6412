//! Gaussian priors over the violation vector built from time-series models.
//!
//! Both constructors use the reference normalization `delta_0 = 0` and return the law of
//! `(delta_{-T_pre}, .., delta_{-1}, delta_1, .., delta_{T_post})`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::GaussianPrior;

/// Period labels in pre-then-post order.
pub fn period_labels(t_pre: usize, t_post: usize) -> Vec<i64> {
    (-(t_pre as i64)..=-1).chain(1..=t_post as i64).collect()
}

/// Matrix `M` mapping pre-period coefficients to increments `w_t = delta_t - delta_{t-1}`
/// for `t = -T_pre+1, .., 0`. The final row encodes `w_0 = -delta_{-1}`.
pub fn differencing_matrix(t_pre: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(t_pre, t_pre);
    for r in 0..t_pre {
        m[(r, r)] = -1.0;
        if r + 1 < t_pre {
            m[(r, r + 1)] = 1.0;
        }
    }
    m
}

/// Random walk with drift: `mean_t = mu * t`, and
/// `cov(delta_s, delta_t) = sigma2 * min(|s|, |t|)` on the same side of period 0, else 0.
pub fn random_walk_prior(mu: f64, sigma2: f64, t_pre: usize, t_post: usize) -> Result<GaussianPrior> {
    if !mu.is_finite() || !sigma2.is_finite() {
        return Err(Error::NonFinite("random-walk parameters".into()));
    }
    if sigma2 < 0.0 {
        return Err(Error::NegativeVariance(format!("sigma2 = {sigma2}")));
    }
    let periods = period_labels(t_pre, t_post);
    let n = periods.len();
    let mean = DVector::from_iterator(n, periods.iter().map(|&t| mu * t as f64));
    let cov = DMatrix::from_fn(n, n, |i, j| {
        let (s, t) = (periods[i], periods[j]);
        if s.signum() == t.signum() {
            sigma2 * s.abs().min(t.abs()) as f64
        } else {
            0.0
        }
    });
    GaussianPrior::new(mean, cov)
}

/// Stationary AR(1) with innovation variance `sigma_eps2`, conditioned on `delta_0 = 0`:
/// `cov(delta_s, delta_t | delta_0 = 0) = v (rho^|s-t| - rho^(|s|+|t|))`, `v = sigma_eps2 / (1 - rho^2)`.
pub fn ar1_prior(rho: f64, sigma_eps2: f64, t_pre: usize, t_post: usize) -> Result<GaussianPrior> {
    if !rho.is_finite() || rho.abs() >= 1.0 {
        return Err(Error::BadRho(rho));
    }
    if !sigma_eps2.is_finite() || sigma_eps2 <= 0.0 {
        return Err(Error::NegativeVariance(format!(
            "sigma_eps2 = {sigma_eps2} must be positive"
        )));
    }
    let v = sigma_eps2 / (1.0 - rho * rho);
    let periods = period_labels(t_pre, t_post);
    let n = periods.len();
    let pow = |k: i64| rho.powi(k as i32);
    let cov = DMatrix::from_fn(n, n, |i, j| {
        let (s, t) = (periods[i], periods[j]);
        v * (pow((s - t).abs()) - pow(s.abs() + t.abs()))
    });
    GaussianPrior::new(DVector::zeros(n), cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    #[test]
    fn differencing_small_cases() {
        assert_eq!(differencing_matrix(1), DMatrix::from_row_slice(1, 1, &[-1.0]));
        assert_eq!(
            differencing_matrix(3),
            DMatrix::from_row_slice(3, 3, &[-1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0])
        );
    }

    #[test]
    fn differencing_telescopes_on_ones() {
        for t in 1..8 {
            let w = differencing_matrix(t) * DVector::from_element(t, 1.0);
            let mut expected = DVector::zeros(t);
            expected[t - 1] = -1.0;
            assert_eq!(w, expected);
        }
    }

    #[test]
    fn random_walk_moments() {
        let p = random_walk_prior(0.1, 1.0, 2, 2).unwrap();
        let m: Vec<f64> = p.mean().iter().copied().collect();
        for (a, b) in m.iter().zip([-0.2, -0.1, 0.1, 0.2]) {
            assert!((a - b).abs() < 1e-15);
        }
        let c = p.cov();
        assert_eq!(c.diagonal().as_slice(), &[2.0, 1.0, 1.0, 2.0]);
        assert_eq!(c[(0, 1)], 1.0);
        assert_eq!(c[(1, 2)], 0.0);
        assert_eq!(c[(2, 3)], 1.0);
    }

    #[test]
    fn random_walk_zero_variance_is_linear_trend() {
        let p = random_walk_prior(0.3, 0.0, 3, 2).unwrap();
        assert_eq!(p.cov().amax(), 0.0);
        assert!((p.mean()[0] + 0.9).abs() < 1e-15);
        assert!((p.mean()[4] - 0.6).abs() < 1e-15);
        assert!(matches!(random_walk_prior(0.0, -1.0, 2, 2), Err(Error::NegativeVariance(_))));
    }

    #[test]
    fn random_walk_sign_blocks_pd() {
        let p = random_walk_prior(0.0, 0.7, 4, 3).unwrap();
        assert!(linalg::is_positive_definite(&linalg::block(p.cov(), 0, 0, 4, 4)));
        assert!(linalg::is_positive_definite(&linalg::block(p.cov(), 4, 4, 3, 3)));
    }

    #[test]
    fn ar1_direct_substitution() {
        let p = ar1_prior(0.5, 0.75, 1, 2).unwrap();
        let c = p.cov();
        assert!((c[(1, 1)] - 0.75).abs() < 1e-15);
        assert!(c[(0, 1)].abs() < 1e-15);
        assert!((c[(1, 2)] - 0.375).abs() < 1e-15);
        assert_eq!(p.mean().amax(), 0.0);
    }

    #[test]
    fn ar1_white_noise() {
        let p = ar1_prior(0.0, 2.0, 3, 3).unwrap();
        assert!((p.cov() - DMatrix::<f64>::identity(6, 6) * 2.0).amax() < 1e-15);
    }

    #[test]
    fn ar1_domain_errors() {
        assert!(matches!(ar1_prior(1.0, 1.0, 2, 2), Err(Error::BadRho(_))));
        assert!(matches!(ar1_prior(-1.2, 1.0, 2, 2), Err(Error::BadRho(_))));
        assert!(matches!(ar1_prior(0.5, 0.0, 2, 2), Err(Error::NegativeVariance(_))));
    }

    #[test]
    fn ar1_pd_over_sweep() {
        for rho in [-0.9, -0.5, 0.0, 0.5, 0.9] {
            let p = ar1_prior(rho, 1.0, 6, 6).unwrap();
            assert!(linalg::is_positive_definite(p.cov()), "rho = {rho}");
        }
    }
}
