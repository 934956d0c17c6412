#![allow(dead_code)]

use bt_core::{DMatrix, DVector, EventStudy, GaussianPrior};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random SPD matrix `scale * (B Bᵀ / n + 0.3 I)` with correlated entries.
pub fn random_pd(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let m = &b * b.transpose() / n as f64 + DMatrix::identity(n, n) * 0.3;
    (&m + m.transpose()) * (0.5 * scale)
}

pub fn random_vec(n: usize, sd: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
}

pub fn random_instance(t_pre: usize, t_post: usize, rng: &mut ChaCha8Rng) -> (EventStudy, GaussianPrior) {
    let n = t_pre + t_post;
    let sigma_scale = rng.random_range(0.3..2.0);
    let v_scale = rng.random_range(0.3..2.0);
    let es = EventStudy::new(
        random_vec(t_pre, 1.5, rng),
        random_vec(t_post, 1.5, rng),
        random_pd(n, sigma_scale, rng),
    )
    .unwrap();
    let prior = GaussianPrior::new(random_vec(n, 0.5, rng), random_pd(n, v_scale, rng)).unwrap();
    (es, prior)
}

pub fn scalar_instance() -> (EventStudy, GaussianPrior) {
    let es = EventStudy::new(
        DVector::from_vec(vec![1.0]),
        DVector::from_vec(vec![2.0]),
        DMatrix::identity(2, 2),
    )
    .unwrap();
    let prior = GaussianPrior::new(
        DVector::zeros(2),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]),
    )
    .unwrap();
    (es, prior)
}

/// Event study whose pre-period coefficients difference to `w` exactly.
pub fn study_from_increments(w: &[f64], beta_post: &[f64], sigma: DMatrix<f64>) -> EventStudy {
    let k = w.len();
    let mut beta = vec![0.0; k];
    beta[k - 1] = -w[k - 1];
    for r in (0..k - 1).rev() {
        beta[r] = beta[r + 1] - w[r];
    }
    EventStudy::new(DVector::from_vec(beta), DVector::from_vec(beta_post.to_vec()), sigma).unwrap()
}
