//! Deterministic fixtures shared by the benchmarks.

use bt_core::{DMatrix, DVector, EventStudy, GaussianPrior, PriorSpec};

/// AR(1)-correlated sampling covariance `s² ρ^|i-j|`, positive definite for `|ρ| < 1`.
pub fn correlated_sigma(n: usize, s2: f64, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| s2 * rho.powi((i as i32 - j as i32).abs()))
}

/// Event study with a gentle linear pre-trend and a wiggle so the EB fit is interior.
pub fn event_study(t_pre: usize, t_post: usize) -> EventStudy {
    let pre = DVector::from_fn(t_pre, |i, _| {
        let t = i as f64 - t_pre as f64;
        0.05 * t + 0.1 * (1.7 * t).sin()
    });
    let post = DVector::from_fn(t_post, |i, _| 0.5 + 0.1 * i as f64);
    EventStudy::new(pre, post, correlated_sigma(t_pre + t_post, 0.01, 0.3)).expect("fixture is valid")
}

pub fn random_walk(t_pre: usize, t_post: usize) -> GaussianPrior {
    PriorSpec::RandomWalk { mu: 0.05, sigma2: 0.02 }
        .build(t_pre, t_post)
        .expect("fixture is valid")
}
