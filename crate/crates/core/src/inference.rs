//! Exact Gaussian posteriors for the post-period treatment effects.
//!
//! Three routes are provided. [`posterior_closed_form`] follows the iterated-expectation
//! formulas (shrunk pre-period coefficients, regression of post on pre sampling errors,
//! conditional prior of the post violations). [`posterior_covariance_form`] conditions in
//! covariance form and accepts singular priors. [`posterior_information_form`] solves the
//! full linear-Gaussian model in precision form and additionally supports a Gaussian prior
//! on `tau_post`. All linear algebra goes through Cholesky solves.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, block, segment};
use crate::model::{CredibleInterval, EventStudy, GaussianPrior, PosteriorSummary};
use crate::normal;

/// Prior on `tau_post`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TauPrior {
    Flat,
    Gaussian {
        #[serde(with = "crate::serde_mat::vector")]
        mean: DVector<f64>,
        #[serde(with = "crate::serde_mat::matrix")]
        cov: DMatrix<f64>,
    },
}

/// Joint posterior of the stacked vector `(delta_pre, delta_post, tau_post)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPosterior {
    pub t_pre: usize,
    pub t_post: usize,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl JointPosterior {
    fn tau_offset(&self) -> usize {
        self.t_pre + self.t_post
    }

    pub fn tau_mean(&self) -> DVector<f64> {
        segment(&self.mean, self.tau_offset(), self.t_post)
    }

    pub fn tau_cov(&self) -> DMatrix<f64> {
        let o = self.tau_offset();
        block(&self.cov, o, o, self.t_post, self.t_post)
    }

    /// Marginal summary; `beta_pre_star` equals the posterior mean of `delta_pre`
    /// because `tau_pre = 0`.
    pub fn summary(&self, post_periods: &[i64]) -> PosteriorSummary {
        PosteriorSummary {
            post_periods: post_periods.to_vec(),
            tau_mean: self.tau_mean(),
            tau_cov: self.tau_cov(),
            delta_post_mean: segment(&self.mean, self.t_pre, self.t_post),
            beta_pre_star: segment(&self.mean, 0, self.t_pre),
            intervals: Vec::new(),
        }
    }
}

struct PriorBlocks {
    mean_pre: DVector<f64>,
    mean_post: DVector<f64>,
    pre: DMatrix<f64>,
    post: DMatrix<f64>,
    pre_post: DMatrix<f64>,
}

fn prior_blocks(prior: &GaussianPrior, t_pre: usize, t_post: usize) -> PriorBlocks {
    let v = prior.cov();
    PriorBlocks {
        mean_pre: segment(prior.mean(), 0, t_pre),
        mean_post: segment(prior.mean(), t_pre, t_post),
        pre: block(v, 0, 0, t_pre, t_pre),
        post: block(v, t_pre, t_pre, t_post, t_post),
        pre_post: block(v, 0, t_pre, t_pre, t_post),
    }
}

/// Posterior under a flat prior on `tau_post`, via the closed-form decomposition
/// `E[tau_post | b] = beta*_post - E[delta_post | b]`.
///
/// Requires the pre-period prior block to be positive definite.
pub fn posterior_closed_form(es: &EventStudy, prior: &GaussianPrior) -> Result<PosteriorSummary> {
    prior.check_matches(es)?;
    let (p, q) = (es.t_pre(), es.t_post());
    let s = es.split_covariance();
    let v = prior_blocks(prior, p, q);

    let chol_v = linalg::cholesky(&v.pre).ok_or(Error::SingularPrior)?;
    let chol_s = linalg::cholesky(&s.pre).ok_or_else(|| Error::NotPositiveDefinite("sigma_pre".into()))?;
    let gamma_v = chol_v.solve(&v.pre_post);
    let gamma_s = chol_s.solve(&s.pre_post);

    // (S^-1 + V^-1)^-1 = V - V (S + V)^-1 V, and the shrunk mean
    // W (S^-1 b + V^-1 mu) = mu + V (S + V)^-1 (b - mu).
    let chol_t = linalg::cholesky(&(&s.pre + &v.pre)).ok_or(Error::SingularPrior)?;
    let w = linalg::symmetrize(&(&v.pre - &v.pre * chol_t.solve(&v.pre)));
    let beta_pre_star = &v.mean_pre + &v.pre * chol_t.solve(&(es.beta_pre() - &v.mean_pre));

    let beta_post_star = es.beta_post() - gamma_s.tr_mul(&(es.beta_pre() - &beta_pre_star));
    let delta_post_mean = &v.mean_post + gamma_v.tr_mul(&(&beta_pre_star - &v.mean_pre));
    let tau_mean = &beta_post_star - &delta_post_mean;

    let sigma_cond = &s.post - s.pre_post.tr_mul(&gamma_s);
    let v_cond = &v.post - v.pre_post.tr_mul(&gamma_v);
    let d = &gamma_s - &gamma_v;
    let tau_cov = linalg::symmetrize(&(sigma_cond + v_cond + d.tr_mul(&(&w * &d))));

    Ok(PosteriorSummary {
        post_periods: es.post_periods().to_vec(),
        tau_mean,
        tau_cov,
        delta_post_mean,
        beta_pre_star,
        intervals: Vec::new(),
    })
}

/// Posterior under a flat prior on `tau_post` by covariance-form conditioning of `delta`
/// on `beta_hat_pre`. Valid for any positive semidefinite prior, including the degenerate
/// deterministic-trend prior.
pub fn posterior_covariance_form(es: &EventStudy, prior: &GaussianPrior) -> Result<PosteriorSummary> {
    prior.check_matches(es)?;
    let (p, q) = (es.t_pre(), es.t_post());
    let n = p + q;
    let s = es.split_covariance();
    let v = prior.cov();
    let v_pre = block(v, 0, 0, p, p);
    let v_rows_pre = block(v, 0, 0, p, n);

    let chol_s = linalg::cholesky(&s.pre).ok_or_else(|| Error::NotPositiveDefinite("sigma_pre".into()))?;
    let chol_t = linalg::cholesky(&(&s.pre + &v_pre))
        .ok_or_else(|| Error::NotPositiveDefinite("sigma_pre + V_pre".into()))?;
    let gamma_s = chol_s.solve(&s.pre_post);

    let mu_pre = segment(prior.mean(), 0, p);
    // Kᵀ = (S + V_pre)^-1 V[pre, :]
    let k_t = chol_t.solve(&v_rows_pre);
    let delta_star = prior.mean() + k_t.tr_mul(&(es.beta_pre() - &mu_pre));
    let c = linalg::symmetrize(&(v - v_rows_pre.tr_mul(&k_t)));

    // tau = b_post - Γ_Σ' b_pre + L delta + e, with L = [Γ_Σ' | -I].
    let mut l = DMatrix::zeros(q, n);
    l.view_mut((0, 0), (q, p)).copy_from(&gamma_s.transpose());
    l.view_mut((0, p), (q, q)).fill_with_identity();
    l.view_mut((0, p), (q, q)).neg_mut();

    let tau_mean = es.beta_post() - gamma_s.tr_mul(es.beta_pre()) + &l * &delta_star;
    let sigma_cond = &s.post - s.pre_post.tr_mul(&gamma_s);
    let tau_cov = linalg::symmetrize(&(sigma_cond + &l * c * l.transpose()));

    Ok(PosteriorSummary {
        post_periods: es.post_periods().to_vec(),
        tau_mean,
        tau_cov,
        delta_post_mean: segment(&delta_star, p, q),
        beta_pre_star: segment(&delta_star, 0, p),
        intervals: Vec::new(),
    })
}

/// Flat-`tau` posterior: closed form when the pre-period prior block is positive
/// definite, covariance-form conditioning otherwise.
pub fn posterior(es: &EventStudy, prior: &GaussianPrior) -> Result<PosteriorSummary> {
    match posterior_closed_form(es, prior) {
        Err(Error::SingularPrior) => posterior_covariance_form(es, prior),
        other => other,
    }
}

/// Observation map `A` with `beta_hat = A (delta_pre, delta_post, tau_post) + eps`.
pub fn observation_matrix(t_pre: usize, t_post: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(t_pre + t_post, t_pre + 2 * t_post);
    a.view_mut((0, 0), (t_pre + t_post, t_pre + t_post)).fill_with_identity();
    a.view_mut((t_pre, t_pre + t_post), (t_post, t_post)).fill_with_identity();
    a
}

/// Joint posterior of `(delta, tau_post)` from the precision form
/// `P = Aᵀ Σ⁻¹ A + P₀`, `h = Aᵀ Σ⁻¹ b + P₀ m₀`.
pub fn posterior_information_form(
    es: &EventStudy,
    prior: &GaussianPrior,
    tau_prior: &TauPrior,
) -> Result<JointPosterior> {
    prior.check_matches(es)?;
    let (p, q) = (es.t_pre(), es.t_post());
    let nd = p + q;
    let n = nd + q;

    let a = observation_matrix(p, q);
    let chol_sigma = linalg::cholesky(es.sigma()).ok_or_else(|| Error::NotPositiveDefinite("sigma".into()))?;
    let sinv_a = chol_sigma.solve(&a);
    let mut precision = a.tr_mul(&sinv_a);
    let mut h = sinv_a.tr_mul(&es.beta());

    let chol_v = linalg::cholesky(prior.cov()).ok_or(Error::SingularPosteriorPrecision)?;
    let v_inv = chol_v.inverse();
    let mut pv = precision.view_mut((0, 0), (nd, nd));
    pv += &v_inv;
    let mut hv = h.rows_mut(0, nd);
    hv += chol_v.solve(prior.mean());

    if let TauPrior::Gaussian { mean, cov } = tau_prior {
        if mean.len() != q || cov.nrows() != q || cov.ncols() != q {
            return Err(Error::DimensionMismatch(format!(
                "tau prior must have dimension {q}"
            )));
        }
        let chol_tau = linalg::cholesky(&linalg::symmetrize(cov))
            .ok_or_else(|| Error::NotPositiveDefinite("tau prior covariance".into()))?;
        let mut pt = precision.view_mut((nd, nd), (q, q));
        pt += chol_tau.inverse();
        let mut ht = h.rows_mut(nd, q);
        ht += chol_tau.solve(mean);
    }

    let precision = linalg::symmetrize(&precision);
    let chol_p = linalg::cholesky(&precision).ok_or(Error::SingularPosteriorPrecision)?;
    let mean = chol_p.solve(&h);
    let cov = linalg::symmetrize(&chol_p.inverse());
    debug_assert_eq!(mean.len(), n);
    Ok(JointPosterior {
        t_pre: p,
        t_post: q,
        mean,
        cov,
    })
}

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::BadLevel(level))
    }
}

/// Equal-tailed marginal interval per post period: `mean ± z sqrt(var)`.
pub fn credible_set(ps: &PosteriorSummary, level: f64) -> Result<Vec<CredibleInterval>> {
    check_level(level)?;
    let z = normal::two_sided_z(level);
    Ok(ps
        .post_periods
        .iter()
        .enumerate()
        .map(|(i, &period)| {
            let half = z * ps.tau_cov[(i, i)].max(0.0).sqrt();
            CredibleInterval {
                period,
                level,
                lower: ps.tau_mean[i] - half,
                upper: ps.tau_mean[i] + half,
            }
        })
        .collect())
}

/// Conventional intervals `beta_hat_post ± z sqrt(diag sigma_post)`, which are valid only
/// when parallel trends hold exactly.
pub fn ols_intervals(es: &EventStudy, level: f64) -> Result<Vec<CredibleInterval>> {
    check_level(level)?;
    let z = normal::two_sided_z(level);
    let s = es.split_covariance();
    Ok(es
        .post_periods()
        .iter()
        .enumerate()
        .map(|(i, &period)| {
            let half = z * s.post[(i, i)].sqrt();
            CredibleInterval {
                period,
                level,
                lower: es.beta_post()[i] - half,
                upper: es.beta_post()[i] + half,
            }
        })
        .collect())
}
