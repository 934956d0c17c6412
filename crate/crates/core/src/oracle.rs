//! Brute-force reference computations used to check the analytic paths.
//!
//! Nothing here calls into the inference, empirical-Bayes or prior-builder code: the
//! quadrature, the covariance-form conditioning and the likelihood grid use LU
//! decompositions and direct loops, and the prior simulators generate paths from the
//! increment recursions.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{EventStudy, GaussianPrior, PriorSpec};

/// Largest number of integration variables `T_pre + 2 T_post` the quadrature accepts.
pub const MAX_QUADRATURE_DIM: usize = 4;
/// Absolute accuracy target for quadrature moments.
pub const QUADRATURE_TARGET: f64 = 1e-3;

/// Moments of `tau_post` produced by an oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct TauMoments {
    pub tau_mean: DVector<f64>,
    pub tau_cov: DMatrix<f64>,
    /// Difference between the full grid and its every-other-point subgrid.
    pub error_estimate: f64,
}

#[derive(Clone)]
struct MomentAccumulator {
    max_lp: f64,
    s0: f64,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl MomentAccumulator {
    fn new(q: usize) -> Self {
        Self {
            max_lp: f64::NEG_INFINITY,
            s0: 0.0,
            s1: vec![0.0; q],
            s2: vec![0.0; q * q],
        }
    }

    fn rescale(&mut self, new_max: f64) {
        if self.max_lp > f64::NEG_INFINITY {
            let f = (self.max_lp - new_max).exp();
            self.s0 *= f;
            self.s1.iter_mut().for_each(|v| *v *= f);
            self.s2.iter_mut().for_each(|v| *v *= f);
        }
        self.max_lp = new_max;
    }

    fn add(&mut self, lp: f64, tau: &[f64]) {
        if lp > self.max_lp {
            self.rescale(lp);
        }
        let w = (lp - self.max_lp).exp();
        let q = tau.len();
        self.s0 += w;
        for a in 0..q {
            self.s1[a] += w * tau[a];
            for b in 0..q {
                self.s2[a * q + b] += w * tau[a] * tau[b];
            }
        }
    }

    fn merge(&mut self, other: &Self) {
        if other.max_lp == f64::NEG_INFINITY {
            return;
        }
        if other.max_lp > self.max_lp {
            self.rescale(other.max_lp);
        }
        let f = (other.max_lp - self.max_lp).exp();
        self.s0 += f * other.s0;
        self.s1.iter_mut().zip(&other.s1).for_each(|(a, b)| *a += f * b);
        self.s2.iter_mut().zip(&other.s2).for_each(|(a, b)| *a += f * b);
    }

    fn moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let q = self.s1.len();
        let mean = DVector::from_iterator(q, self.s1.iter().map(|v| v / self.s0));
        let cov = DMatrix::from_fn(q, q, |a, b| self.s2[a * q + b] / self.s0 - mean[a] * mean[b]);
        (mean, cov)
    }
}

/// Tensor-grid midpoint quadrature of `p(delta, tau | b) ∝ N(b; A(delta, tau), Sigma) π(delta)`
/// with a flat `tau` prior truncated to `±half_width` prior-predictive s.d. of `b_post`.
pub fn grid_posterior_oracle(
    es: &EventStudy,
    prior: &GaussianPrior,
    half_width: f64,
    points_per_dim: usize,
) -> Result<TauMoments> {
    let (p, q) = (es.t_pre(), es.t_post());
    let nd = p + q;
    let dim = p + 2 * q;
    if dim > MAX_QUADRATURE_DIM {
        return Err(Error::DimensionTooLarge {
            dim,
            cap: MAX_QUADRATURE_DIM,
        });
    }
    if prior.dim() != nd {
        return Err(Error::DimensionMismatch("prior does not match event study".into()));
    }
    if points_per_dim < 4 || !(half_width > 0.0) {
        return Err(Error::InvalidArgument(
            "quadrature needs at least 4 points per dimension and a positive half-width".into(),
        ));
    }
    let sigma_inv = es
        .sigma()
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularCovariance("sigma".into()))?;
    let v = prior.cov();
    let v_inv = v
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularCovariance("prior covariance".into()))?;
    let mu = prior.mean();
    let b = es.beta();

    // Per-axis centers and half-widths: delta axes follow the prior, tau axes are
    // centred on b_post - mu_post with the prior-predictive spread of b_post.
    let mut center = vec![0.0; dim];
    let mut radius = vec![0.0; dim];
    for i in 0..nd {
        center[i] = mu[i];
        radius[i] = half_width * v[(i, i)].sqrt();
    }
    for t in 0..q {
        let k = nd + t;
        center[k] = b[p + t] - mu[p + t];
        radius[k] = half_width * (es.sigma()[(p + t, p + t)] + v[(p + t, p + t)]).sqrt();
    }
    if radius.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::SingularCovariance("degenerate prior axis".into()));
    }
    let n = points_per_dim;
    let nodes: Vec<Vec<f64>> = (0..dim)
        .map(|axis| {
            (0..n)
                .map(|k| center[axis] - radius[axis] + (k as f64 + 0.5) * 2.0 * radius[axis] / n as f64)
                .collect()
        })
        .collect();
    let flat = |m: &DMatrix<f64>| -> Vec<f64> { (0..nd * nd).map(|k| m[(k / nd, k % nd)]).collect() };
    let (s_inv, v_inv) = (flat(&sigma_inv), flat(&v_inv));
    let (mu, b): (Vec<f64>, Vec<f64>) = (mu.iter().copied().collect(), b.iter().copied().collect());

    let partials: Vec<(MomentAccumulator, MomentAccumulator)> = (0..n)
        .into_par_iter()
        .map(|i0| {
            let mut fine = MomentAccumulator::new(q);
            let mut coarse = MomentAccumulator::new(q);
            let mut idx = vec![0usize; dim];
            idx[0] = i0;
            let mut x = [0.0f64; MAX_QUADRATURE_DIM];
            let mut r = [0.0f64; MAX_QUADRATURE_DIM];
            let mut d = [0.0f64; MAX_QUADRATURE_DIM];
            loop {
                for axis in 0..dim {
                    x[axis] = nodes[axis][idx[axis]];
                }
                for i in 0..nd {
                    d[i] = x[i] - mu[i];
                    r[i] = b[i] - x[i];
                }
                for t in 0..q {
                    r[p + t] -= x[nd + t];
                }
                let mut quad = 0.0;
                for i in 0..nd {
                    let row = &s_inv[i * nd..(i + 1) * nd];
                    let vrow = &v_inv[i * nd..(i + 1) * nd];
                    let mut acc_r = 0.0;
                    let mut acc_d = 0.0;
                    for j in 0..nd {
                        acc_r += row[j] * r[j];
                        acc_d += vrow[j] * d[j];
                    }
                    quad += r[i] * acc_r + d[i] * acc_d;
                }
                let lp = -0.5 * quad;
                let tau = &x[nd..dim];
                fine.add(lp, tau);
                if idx.iter().all(|k| k % 2 == 0) {
                    coarse.add(lp, tau);
                }
                // Odometer over axes 1..dim.
                let mut axis = dim - 1;
                loop {
                    if axis == 0 {
                        return (fine, coarse);
                    }
                    idx[axis] += 1;
                    if idx[axis] < n {
                        break;
                    }
                    idx[axis] = 0;
                    axis -= 1;
                }
            }
        })
        .collect();

    let mut fine = MomentAccumulator::new(q);
    let mut coarse = MomentAccumulator::new(q);
    for (f, c) in &partials {
        fine.merge(f);
        coarse.merge(c);
    }
    let (mean, cov) = fine.moments();
    let (mean_c, cov_c) = coarse.moments();
    let error_estimate = (&mean - &mean_c).amax().max((&cov - &cov_c).amax());
    if !error_estimate.is_finite() || error_estimate > QUADRATURE_TARGET {
        return Err(Error::GridTooCoarse {
            estimate: error_estimate,
            target: QUADRATURE_TARGET,
        });
    }
    Ok(TauMoments {
        tau_mean: mean,
        tau_cov: cov,
        error_estimate,
    })
}

/// Exact conditioning of `(delta, tau_post) ~ N((mu, 0), blockdiag(V, kappa I))` on
/// `b = A (delta, tau) + eps` in covariance form, via LU solves.
pub fn proper_prior_limit_oracle(es: &EventStudy, prior: &GaussianPrior, kappa: f64) -> Result<TauMoments> {
    let (p, q) = (es.t_pre(), es.t_post());
    let nd = p + q;
    let n = nd + q;
    if prior.dim() != nd {
        return Err(Error::DimensionMismatch("prior does not match event study".into()));
    }
    let sigma_scale = es.sigma().diagonal().max();
    if !(kappa > f64::EPSILON * sigma_scale) || !kappa.is_finite() {
        return Err(Error::SingularCovariance(format!(
            "tau prior variance {kappa:e} is numerically zero"
        )));
    }
    let mut c0 = DMatrix::zeros(n, n);
    c0.view_mut((0, 0), (nd, nd)).copy_from(prior.cov());
    for t in 0..q {
        c0[(nd + t, nd + t)] = kappa;
    }
    let mut m0 = DVector::zeros(n);
    m0.rows_mut(0, nd).copy_from(prior.mean());

    let mut a = DMatrix::zeros(nd, n);
    for i in 0..nd {
        a[(i, i)] = 1.0;
    }
    for t in 0..q {
        a[(p + t, nd + t)] = 1.0;
    }
    let c0_at = &c0 * a.transpose();
    let s = &a * &c0_at + es.sigma();
    let lu = s.clone().lu();
    let resid = es.beta() - &a * &m0;
    let sol = lu
        .solve(&resid)
        .ok_or_else(|| Error::SingularCovariance("predictive covariance".into()))?;
    let mean = &m0 + &c0_at * sol;
    let k = lu
        .solve(&c0_at.transpose())
        .ok_or_else(|| Error::SingularCovariance("predictive covariance".into()))?;
    let cov = &c0 - &c0_at * k;
    Ok(TauMoments {
        tau_mean: mean.rows(nd, q).into_owned(),
        tau_cov: cov.view((nd, nd), (q, q)).into_owned(),
        error_estimate: 0.0,
    })
}

/// Increment estimates and their covariance, built directly from first differences
/// with `beta_0 = 0`.
fn increments_direct(es: &EventStudy) -> (DVector<f64>, DMatrix<f64>) {
    let k = es.t_pre();
    let b = es.beta_pre();
    let s = es.split_covariance().pre;
    // w_r = beta_{r+1} - beta_r, with beta_k := 0 for the reference period.
    let coef = |r: usize, c: usize| -> f64 {
        if c == r {
            -1.0
        } else if c == r + 1 {
            1.0
        } else {
            0.0
        }
    };
    let w = DVector::from_fn(k, |r, _| if r + 1 < k { b[r + 1] - b[r] } else { -b[r] });
    let sw = DMatrix::from_fn(k, k, |r1, r2| {
        let mut acc = 0.0;
        for c1 in 0..k {
            for c2 in 0..k {
                acc += coef(r1, c1) * s[(c1, c2)] * coef(r2, c2);
            }
        }
        acc
    });
    (w, sw)
}

/// Joint log-likelihood of `w_hat ~ N(mu 1, Sigma_w + sigma2 I)` via LU.
pub fn exact_log_likelihood(w: &DVector<f64>, sigma_w: &DMatrix<f64>, mu: f64, sigma2: f64) -> Option<f64> {
    let k = w.len();
    let omega = sigma_w + DMatrix::identity(k, k) * sigma2;
    let lu = omega.lu();
    let det = lu.determinant();
    if !(det > 0.0) {
        return None;
    }
    let r = w.add_scalar(-mu);
    let sol = lu.solve(&r)?;
    Some(-0.5 * (k as f64 * (2.0 * std::f64::consts::PI).ln() + det.ln() + r.dot(&sol)))
}

/// Argmax of the exact likelihood over an `n x n` grid in `(mu, sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMle {
    pub mu: f64,
    pub sigma: f64,
    pub sigma2: f64,
    pub log_likelihood: f64,
    pub mu_step: f64,
    pub sigma_step: f64,
}

pub fn mle_grid_oracle(es: &EventStudy, mu_range: (f64, f64), sigma_range: (f64, f64), n: usize) -> Result<GridMle> {
    if n < 100 {
        return Err(Error::InvalidArgument("grid oracle needs n >= 100".into()));
    }
    if !(mu_range.0 < mu_range.1) || !(sigma_range.0 < sigma_range.1) || sigma_range.0 < 0.0 {
        return Err(Error::InvalidArgument("grid ranges must be increasing, sigma >= 0".into()));
    }
    let (w, sw) = increments_direct(es);
    let mu_step = (mu_range.1 - mu_range.0) / (n - 1) as f64;
    let sigma_step = (sigma_range.1 - sigma_range.0) / (n - 1) as f64;
    let best = (0..n)
        .into_par_iter()
        .map(|j| {
            let sigma = sigma_range.0 + sigma_step * j as f64;
            let mut best = (f64::NEG_INFINITY, 0.0, sigma);
            for i in 0..n {
                let mu = mu_range.0 + mu_step * i as f64;
                if let Some(ll) = exact_log_likelihood(&w, &sw, mu, sigma * sigma) {
                    if ll > best.0 {
                        best = (ll, mu, sigma);
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, 0.0, 0.0), |acc, c| if c.0 > acc.0 { c } else { acc });
    if best.0 == f64::NEG_INFINITY {
        return Err(Error::SingularOmega(sigma_range.0 * sigma_range.0));
    }
    Ok(GridMle {
        mu: best.1,
        sigma: best.2,
        sigma2: best.2 * best.2,
        log_likelihood: best.0,
        mu_step,
        sigma_step,
    })
}

/// Repeated grid search, each level zooming to `±2` cells around the previous argmax.
pub fn mle_grid_oracle_refined(
    es: &EventStudy,
    mu_range: (f64, f64),
    sigma_range: (f64, f64),
    n: usize,
    levels: usize,
) -> Result<GridMle> {
    let mut g = mle_grid_oracle(es, mu_range, sigma_range, n)?;
    for _ in 1..levels {
        let mr = (g.mu - 2.0 * g.mu_step, g.mu + 2.0 * g.mu_step);
        let sr = ((g.sigma - 2.0 * g.sigma_step).max(0.0), g.sigma + 2.0 * g.sigma_step);
        g = mle_grid_oracle(es, mr, sr, n)?;
    }
    Ok(g)
}

/// Sample moments of simulated violation paths with their Monte Carlo standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub mean_se: DVector<f64>,
    pub cov_se: DMatrix<f64>,
    pub n_draws: usize,
}

fn sample_moments(draws: &[Vec<f64>]) -> MomentEstimate {
    let n = draws.len();
    let d = draws.first().map_or(0, Vec::len);
    let nf = n as f64;
    let mean = DVector::from_fn(d, |i, _| draws.iter().map(|x| x[i]).sum::<f64>() / nf);
    let mut cov = DMatrix::zeros(d, d);
    let mut cov_se = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let prods: Vec<f64> = draws.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).collect();
            let m = prods.iter().sum::<f64>() / nf;
            let var = prods.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (nf - 1.0);
            cov[(i, j)] = m * nf / (nf - 1.0);
            cov[(j, i)] = cov[(i, j)];
            cov_se[(i, j)] = (var / nf).sqrt();
            cov_se[(j, i)] = cov_se[(i, j)];
        }
    }
    let mean_se = DVector::from_fn(d, |i, _| (cov[(i, i)] / nf).sqrt());
    MomentEstimate {
        mean,
        cov,
        mean_se,
        cov_se,
        n_draws: n,
    }
}

fn draw_path(spec: &PriorSpec, t_pre: usize, t_post: usize, rng: &mut ChaCha20Rng, factor: Option<&DMatrix<f64>>) -> Vec<f64> {
    let mut z = || -> f64 { StandardNormal.sample(rng) };
    match spec {
        PriorSpec::RandomWalk { mu, sigma2 } => {
            let sd = sigma2.sqrt();
            // Backward: delta_{-k} = -(w_{-k+1} + .. + w_0).
            let mut pre = vec![0.0; t_pre];
            let mut acc = 0.0;
            for k in 1..=t_pre {
                acc -= mu + sd * z();
                pre[t_pre - k] = acc;
            }
            let mut path = pre;
            let mut acc = 0.0;
            for _ in 0..t_post {
                acc += mu + sd * z();
                path.push(acc);
            }
            path
        }
        PriorSpec::Ar1 { rho, sigma_eps2 } => {
            // Given delta_0 = 0 both directions are AR(1) recursions (the stationary
            // Gaussian AR(1) is time-reversible).
            let sd = sigma_eps2.sqrt();
            let mut pre = vec![0.0; t_pre];
            let mut prev = 0.0;
            for k in 1..=t_pre {
                prev = rho * prev + sd * z();
                pre[t_pre - k] = prev;
            }
            let mut path = pre;
            let mut prev = 0.0;
            for _ in 0..t_post {
                prev = rho * prev + sd * z();
                path.push(prev);
            }
            path
        }
        PriorSpec::Explicit(g) => {
            let f = factor.expect("explicit prior needs a factor");
            let e = DVector::from_fn(g.dim(), |_, _| z());
            (g.mean() + f * e).iter().copied().collect()
        }
    }
}

/// Monte Carlo moments of the violation vector implied by `spec`.
pub fn mc_prior_moments(spec: &PriorSpec, t_pre: usize, t_post: usize, n_draws: usize, seed: u64) -> Result<MomentEstimate> {
    if n_draws < 10_000 {
        return Err(Error::InvalidArgument("mc_prior_moments needs at least 1e4 draws".into()));
    }
    let factor = match spec {
        PriorSpec::Explicit(g) => {
            if g.dim() != t_pre + t_post {
                return Err(Error::DimensionMismatch("explicit prior dimension".into()));
            }
            Some(crate::linalg::psd_factor(g.cov()))
        }
        PriorSpec::RandomWalk { sigma2, .. } if *sigma2 < 0.0 => {
            return Err(Error::NegativeVariance(format!("sigma2 = {sigma2}")))
        }
        PriorSpec::Ar1 { rho, .. } if !(rho.abs() < 1.0) => return Err(Error::BadRho(*rho)),
        _ => None,
    };
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let draws: Vec<Vec<f64>> = (0..n_draws)
        .map(|_| draw_path(spec, t_pre, t_post, &mut rng, factor.as_ref()))
        .collect();
    Ok(sample_moments(&draws))
}

/// AR(1) conditional moments by rejection: simulate stationary paths over
/// `-T_pre..=T_post` and keep those with `|delta_0| < window`.
pub fn mc_ar1_rejection_moments(
    rho: f64,
    sigma_eps2: f64,
    t_pre: usize,
    t_post: usize,
    n_draws: usize,
    window: f64,
    seed: u64,
) -> Result<MomentEstimate> {
    if !(rho.abs() < 1.0) {
        return Err(Error::BadRho(rho));
    }
    let v = sigma_eps2 / (1.0 - rho * rho);
    let sd = sigma_eps2.sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut kept = Vec::new();
    for _ in 0..n_draws {
        let z0: f64 = StandardNormal.sample(&mut rng);
        let mut x = v.sqrt() * z0;
        let mut path = Vec::with_capacity(t_pre + t_post + 1);
        path.push(x);
        for _ in 0..(t_pre + t_post) {
            let e: f64 = StandardNormal.sample(&mut rng);
            x = rho * x + sd * e;
            path.push(x);
        }
        if path[t_pre].abs() < window {
            path.remove(t_pre);
            kept.push(path);
        }
    }
    if kept.len() < 2 {
        return Err(Error::InvalidArgument("rejection window accepted fewer than 2 paths".into()));
    }
    Ok(sample_moments(&kept))
}
