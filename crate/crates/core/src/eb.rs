//! Empirical-Bayes and hierarchical-Bayes treatment of a random-walk violation process.
//!
//! Pre-period coefficients are differenced into increment estimates `w_hat = M beta_hat_pre`,
//! which satisfy `w_hat ~ N(mu 1, Sigma_w + sigma2 I)` with `Sigma_w = M Sigma_pre Mᵀ`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::posterior;
use crate::linalg;
use crate::model::{CredibleInterval, EventStudy, PosteriorSummary};
use crate::normal;
use crate::priors::{differencing_matrix, random_walk_prior};

/// `sigma2` is searched on `log(sigma2 + SIGMA2_FLOOR)`.
pub const SIGMA2_FLOOR: f64 = 1e-12;
/// Fits with `sigma2_hat` below this are flagged as boundary solutions.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Absolute tolerance on `sigma2` for the golden-section refinement.
pub const SIGMA2_TOL: f64 = 1e-10;
const COARSE_POINTS: usize = 96;
const MAX_GOLDEN_ITERS: usize = 500;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Increment estimates and their sampling covariance.
///
/// The likelihood is evaluated in the eigenbasis of `Sigma_w`, where
/// `Omega = Sigma_w + sigma2 I` is diagonal, so each evaluation costs `O(T_pre)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Increments {
    pub w_hat: DVector<f64>,
    pub sigma_w: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    w_rot: DVector<f64>,
    ones_rot: DVector<f64>,
}

/// Smallest accepted eigenvalue of `Omega`, relative to the largest.
const OMEGA_REL_TOL: f64 = 1e-13;

impl Increments {
    pub fn from_event_study(es: &EventStudy) -> Self {
        let m = differencing_matrix(es.t_pre());
        let s_pre = es.split_covariance().pre;
        Self::new(&m * es.beta_pre(), linalg::symmetrize(&(&m * s_pre * m.transpose())))
    }

    pub fn new(w_hat: DVector<f64>, sigma_w: DMatrix<f64>) -> Self {
        let eig = sigma_w.clone().symmetric_eigen();
        let q = eig.eigenvectors;
        let ones = DVector::from_element(w_hat.len(), 1.0);
        Self {
            w_rot: q.tr_mul(&w_hat),
            ones_rot: q.tr_mul(&ones),
            eigenvalues: eig.eigenvalues,
            w_hat,
            sigma_w,
        }
    }

    pub fn len(&self) -> usize {
        self.w_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w_hat.is_empty()
    }

    /// Eigenvalues of `Omega` at `sigma2`.
    fn omega_spectrum(&self, sigma2: f64) -> Result<DVector<f64>> {
        let d = self.eigenvalues.add_scalar(sigma2);
        let max = d.max();
        if !(d.min() > OMEGA_REL_TOL * max) || !max.is_finite() {
            return Err(Error::SingularOmega(sigma2));
        }
        Ok(d)
    }

    /// Exact log-likelihood at `(mu, sigma2)`.
    pub fn log_likelihood(&self, mu: f64, sigma2: f64) -> Result<f64> {
        let d = self.omega_spectrum(sigma2)?;
        let mut quad = 0.0;
        let mut log_det = 0.0;
        for i in 0..d.len() {
            let r = self.w_rot[i] - mu * self.ones_rot[i];
            quad += r * r / d[i];
            log_det += d[i].ln();
        }
        Ok(-0.5 * (self.len() as f64 * LN_2PI + log_det + quad))
    }

    /// GLS drift `mu_hat(sigma2) = 1ᵀΩ⁻¹w / 1ᵀΩ⁻¹1`.
    pub fn profiled_mu(&self, sigma2: f64) -> Result<f64> {
        let d = self.omega_spectrum(sigma2)?;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..d.len() {
            num += self.ones_rot[i] * self.w_rot[i] / d[i];
            den += self.ones_rot[i] * self.ones_rot[i] / d[i];
        }
        Ok(num / den)
    }

    /// GLS drift and the concentrated log-likelihood at `sigma2`.
    pub fn profile(&self, sigma2: f64) -> Result<(f64, f64)> {
        let mu = self.profiled_mu(sigma2)?;
        Ok((mu, self.log_likelihood(mu, sigma2)?))
    }

    /// Derivative of the concentrated log-likelihood in `sigma2`:
    /// `(|Ω⁻¹ r|² - tr Ω⁻¹) / 2` with `r` the GLS residual.
    pub fn profile_score(&self, sigma2: f64) -> Result<f64> {
        let mu = self.profiled_mu(sigma2)?;
        let d = self.omega_spectrum(sigma2)?;
        let mut score = 0.0;
        for i in 0..d.len() {
            let r = self.w_rot[i] - mu * self.ones_rot[i];
            score += (r / d[i]).powi(2) - 1.0 / d[i];
        }
        Ok(0.5 * score)
    }

    fn sample_mean_var(&self) -> (f64, f64) {
        let n = self.len() as f64;
        let mean = self.w_hat.mean();
        let var = if self.len() > 1 {
            self.w_hat.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (mean, var)
    }
}

/// Maximum-likelihood fit of the random-walk hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbFit {
    pub mu_hat: f64,
    pub sigma2_hat: f64,
    pub log_likelihood: f64,
    pub converged: bool,
    pub boundary: bool,
    pub n_pre: usize,
}

impl EbFit {
    pub fn sigma_hat(&self) -> f64 {
        self.sigma2_hat.sqrt()
    }

    /// One-line fit report, e.g. `μ̂ = -0.24, σ̂ = 0.61`.
    pub fn fit_line(&self) -> String {
        format!("μ̂ = {:.2}, σ̂ = {:.2}", self.mu_hat, self.sigma_hat())
    }

    /// Report in outcome units, e.g. `drift -0.24 p.p./period, innovation s.d. 0.61`.
    pub fn describe(&self, units: &str) -> String {
        format!(
            "drift {:.2} {units}/period, innovation s.d. {:.2}",
            self.mu_hat,
            self.sigma_hat()
        )
    }
}

/// Profiles out the drift and maximizes the concentrated likelihood over `sigma2` by a
/// coarse log-scale scan followed by golden-section refinement.
pub fn fit_random_walk_mle(es: &EventStudy) -> Result<EbFit> {
    if es.t_pre() < 2 {
        return Err(Error::TooFewPeriods {
            needed: 2,
            got: es.t_pre(),
        });
    }
    fit_increments(&Increments::from_event_study(es))
}

pub fn fit_increments(inc: &Increments) -> Result<EbFit> {
    let max_diag = inc.sigma_w.diagonal().max();
    let (_, sample_var) = inc.sample_mean_var();
    let sigma2_max = 100.0 * max_diag + sample_var;

    let to_sigma2 = |x: f64| (x.exp() - SIGMA2_FLOOR).max(0.0);
    let objective = |x: f64| inc.profile(to_sigma2(x)).map(|(_, ll)| ll);

    let x_lo = SIGMA2_FLOOR.ln();
    let x_hi = (sigma2_max + SIGMA2_FLOOR).ln();
    let xs: Vec<f64> = (0..COARSE_POINTS)
        .map(|i| x_lo + (x_hi - x_lo) * i as f64 / (COARSE_POINTS - 1) as f64)
        .collect();
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &x) in xs.iter().enumerate() {
        let v = objective(x)?;
        if v > best_val {
            best_val = v;
            best = i;
        }
    }

    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(COARSE_POINTS - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = objective(c)?;
    let mut fd = objective(d)?;
    let mut converged = false;
    for _ in 0..MAX_GOLDEN_ITERS {
        if to_sigma2(b) - to_sigma2(a) < SIGMA2_TOL {
            converged = true;
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d)?;
        }
    }

    let mut candidates = vec![(to_sigma2(c), fc), (to_sigma2(d), fd), (xs[best], best_val)];
    candidates[2].0 = to_sigma2(candidates[2].0);
    let (mut sigma2, mut ll) = candidates
        .into_iter()
        .fold((0.0, f64::NEG_INFINITY), |acc, (s, v)| if v > acc.1 { (s, v) } else { acc });
    let (_, ll_zero) = inc.profile(0.0)?;
    if ll_zero >= ll {
        sigma2 = 0.0;
        ll = ll_zero;
    } else {
        // Objective values stop resolving sigma2 near sqrt(eps); polish on the score.
        if let Some(root) = polish_on_score(inc, sigma2)? {
            let (_, ll_root) = inc.profile(root)?;
            if ll_root >= ll - 1e-12 * ll.abs().max(1.0) {
                sigma2 = root;
            }
        }
    }
    let (mu_hat, log_likelihood) = inc.profile(sigma2)?;
    debug_assert!((log_likelihood - ll).abs() <= 1e-9 * ll.abs().max(1.0));
    Ok(EbFit {
        mu_hat,
        sigma2_hat: sigma2,
        log_likelihood,
        converged,
        boundary: sigma2 < BOUNDARY_TOL,
        n_pre: inc.len(),
    })
}

/// Bisection on the score in a small bracket around an interior maximizer.
fn polish_on_score(inc: &Increments, sigma2: f64) -> Result<Option<f64>> {
    let mut step = (1e-6 * sigma2).max(1e-9);
    let mut lo = (sigma2 - step).max(0.0);
    let mut hi = sigma2 + step;
    for _ in 0..20 {
        if inc.profile_score(lo)? > 0.0 && inc.profile_score(hi)? < 0.0 {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if hi - lo <= 4.0 * f64::EPSILON * mid || mid == lo || mid == hi {
                    break;
                }
                if inc.profile_score(mid)? > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Some(0.5 * (lo + hi)));
        }
        step *= 4.0;
        lo = (sigma2 - step).max(0.0);
        hi = sigma2 + step;
    }
    Ok(None)
}

/// Plug-in posterior: fit `(mu, sigma2)` on the pre-trends, then condition on the same
/// estimates under the implied random-walk prior.
pub fn eb_posterior(es: &EventStudy, level: f64) -> Result<(EbFit, PosteriorSummary)> {
    let fit = fit_random_walk_mle(es)?;
    let prior = random_walk_prior(fit.mu_hat, fit.sigma2_hat, es.t_pre(), es.t_post())?;
    let ps = posterior(es, &prior)?.with_credible_sets(level)?;
    Ok((fit, ps))
}

/// Discrete hyper-prior over `(mu, sigma)`; `weights` is row-major with `mu` as the outer index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperPriorGrid {
    mu_grid: Vec<f64>,
    sigma_grid: Vec<f64>,
    weights: Vec<f64>,
}

impl HyperPriorGrid {
    pub fn new(mu_grid: Vec<f64>, sigma_grid: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if mu_grid.is_empty() || sigma_grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if weights.len() != mu_grid.len() * sigma_grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} weights for a {}x{} grid",
                weights.len(),
                mu_grid.len(),
                sigma_grid.len()
            )));
        }
        let finite = mu_grid.iter().chain(&sigma_grid).chain(&weights).all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("hyper-prior grid".into()));
        }
        if mu_grid.windows(2).any(|w| w[0] >= w[1]) || sigma_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid("grid axes must be strictly ascending".into()));
        }
        if sigma_grid[0] < 0.0 {
            return Err(Error::InvalidGrid("sigma grid must be nonnegative".into()));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidGrid("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGrid(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self {
            mu_grid,
            sigma_grid,
            weights,
        })
    }

    pub fn uniform(mu_grid: Vec<f64>, sigma_grid: Vec<f64>) -> Result<Self> {
        let n = mu_grid.len() * sigma_grid.len();
        if n == 0 {
            return Err(Error::EmptyGrid);
        }
        let mut weights = vec![1.0 / n as f64; n];
        // Absorb rounding so the masses sum to one within the validation tolerance.
        let total: f64 = weights.iter().sum();
        weights[0] += 1.0 - total;
        Self::new(mu_grid, sigma_grid, weights)
    }

    /// Uniform default: `mu` over `±(|mean w_hat| + 5 sd)`, `sigma` over `[0, 5 sd]`,
    /// 41 points per axis, where `sd` is the sample s.d. of the increment estimates.
    pub fn default_for(es: &EventStudy) -> Result<Self> {
        let inc = Increments::from_event_study(es);
        let (mean, var) = inc.sample_mean_var();
        let mut sd = var.sqrt();
        if !(sd > 0.0) {
            sd = (inc.sigma_w.diagonal().mean()).sqrt();
        }
        let half = mean.abs() + 5.0 * sd;
        Self::uniform(linspace(-half, half, 41), linspace(0.0, 5.0 * sd, 41))
    }

    pub fn mu_grid(&self) -> &[f64] {
        &self.mu_grid
    }

    pub fn sigma_grid(&self) -> &[f64] {
        &self.sigma_grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.weights.len());
        for (i, &mu) in self.mu_grid.iter().enumerate() {
            for (j, &s) in self.sigma_grid.iter().enumerate() {
                out.push((mu, s, self.weights[i * self.sigma_grid.len() + j]));
            }
        }
        out
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// One axis of the hyper-prior configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    Uniform,
}

/// Hyper-prior configuration:
/// `{"mu":{"min":..,"max":..,"n":..},"sigma":{..},"weights":"uniform"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperGridConfig {
    pub mu: AxisConfig,
    pub sigma: AxisConfig,
    #[serde(default = "default_scheme")]
    pub weights: WeightScheme,
}

fn default_scheme() -> WeightScheme {
    WeightScheme::Uniform
}

impl HyperGridConfig {
    pub fn to_grid(&self) -> Result<HyperPriorGrid> {
        for (name, ax) in [("mu", &self.mu), ("sigma", &self.sigma)] {
            if ax.n == 0 {
                return Err(Error::EmptyGrid);
            }
            if ax.max < ax.min || (ax.n > 1 && ax.max == ax.min) {
                return Err(Error::InvalidGrid(format!("{name}: need min < max for n > 1")));
            }
        }
        match self.weights {
            WeightScheme::Uniform => HyperPriorGrid::uniform(
                linspace(self.mu.min, self.mu.max, self.mu.n),
                linspace(self.sigma.min, self.sigma.max, self.sigma.n),
            ),
        }
    }
}

/// Posterior over the hyper-prior grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperPosterior {
    pub mu_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    /// `weights[i][j]` is the posterior mass of `(mu_grid[i], sigma_grid[j])`.
    pub weights: Vec<Vec<f64>>,
    pub mu_mean: f64,
    pub sigma_mean: f64,
    pub map_mu: f64,
    pub map_sigma: f64,
}

/// Gaussian component of a posterior mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub summary: PosteriorSummary,
}

/// Integrates the flat-`tau` posterior over a discrete hyper-prior on the random-walk
/// parameters, weighting each point by prior mass times the marginal likelihood of `w_hat`.
pub fn hierarchical_posterior(
    es: &EventStudy,
    grid: &HyperPriorGrid,
    level: f64,
) -> Result<(HyperPosterior, PosteriorSummary)> {
    let inc = Increments::from_event_study(es);
    let points = grid.points();
    let log_w: Vec<f64> = points
        .par_iter()
        .map(|&(mu, s, mass)| {
            if mass == 0.0 {
                Ok(f64::NEG_INFINITY)
            } else {
                Ok(mass.ln() + inc.log_likelihood(mu, s * s)?)
            }
        })
        .collect::<Vec<Result<f64>>>()
        .into_iter()
        .collect::<Result<_>>()?;

    let shift = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY || shift.is_nan() {
        return Err(Error::AllWeightsUnderflow);
    }
    let raw: Vec<f64> = log_w.iter().map(|&l| (l - shift).exp()).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();

    let (t_pre, t_post) = (es.t_pre(), es.t_post());
    let components: Vec<MixtureComponent> = points
        .par_iter()
        .zip(weights.par_iter())
        .filter(|(_, &w)| w > 0.0)
        .map(|(&(mu, s, _), &w)| {
            let prior = random_walk_prior(mu, s * s, t_pre, t_post)?;
            Ok(MixtureComponent {
                weight: w,
                summary: posterior(es, &prior)?,
            })
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<_>>()?;

    let summary = mixture_summary(&components, es.post_periods(), level)?;

    let ns = grid.sigma_grid().len();
    let mut by_mu = vec![vec![0.0; ns]; grid.mu_grid().len()];
    let (mut mu_mean, mut sigma_mean) = (0.0, 0.0);
    let mut best = 0;
    for (k, (&(mu, s, _), &w)) in points.iter().zip(&weights).enumerate() {
        by_mu[k / ns][k % ns] = w;
        mu_mean += w * mu;
        sigma_mean += w * s;
        if w > weights[best] {
            best = k;
        }
    }
    let hp = HyperPosterior {
        mu_grid: grid.mu_grid().to_vec(),
        sigma_grid: grid.sigma_grid().to_vec(),
        weights: by_mu,
        mu_mean,
        sigma_mean,
        map_mu: points[best].0,
        map_sigma: points[best].1,
    };
    Ok((hp, summary))
}

/// Moments and equal-tailed intervals of a Gaussian mixture posterior.
pub fn mixture_summary(
    components: &[MixtureComponent],
    post_periods: &[i64],
    level: f64,
) -> Result<PosteriorSummary> {
    let first = components.first().ok_or(Error::AllWeightsUnderflow)?;
    if components.len() == 1 {
        return first.summary.clone().with_credible_sets(level);
    }
    let q = first.summary.tau_mean.len();
    let p = first.summary.beta_pre_star.len();
    let mut tau_mean = DVector::zeros(q);
    let mut delta_post_mean = DVector::zeros(q);
    let mut beta_pre_star = DVector::zeros(p);
    for c in components {
        tau_mean += &c.summary.tau_mean * c.weight;
        delta_post_mean += &c.summary.delta_post_mean * c.weight;
        beta_pre_star += &c.summary.beta_pre_star * c.weight;
    }
    let mut tau_cov = DMatrix::zeros(q, q);
    for c in components {
        let d = &c.summary.tau_mean - &tau_mean;
        tau_cov += (&c.summary.tau_cov + &d * d.transpose()) * c.weight;
    }
    let mut intervals = Vec::with_capacity(q);
    for (t, &period) in post_periods.iter().enumerate() {
        let marg: Vec<(f64, f64, f64)> = components
            .iter()
            .map(|c| {
                (
                    c.weight,
                    c.summary.tau_mean[t],
                    c.summary.tau_cov[(t, t)].max(0.0).sqrt(),
                )
            })
            .collect();
        let (lower, upper) = mixture_interval(&marg, level)?;
        intervals.push(CredibleInterval {
            period,
            level,
            lower,
            upper,
        });
    }
    Ok(PosteriorSummary {
        post_periods: post_periods.to_vec(),
        tau_mean,
        tau_cov: linalg::symmetrize(&tau_cov),
        delta_post_mean,
        beta_pre_star,
        intervals,
    })
}

/// CDF of a univariate mixture given `(weight, mean, sd)` triples.
pub fn mixture_cdf(components: &[(f64, f64, f64)], x: f64) -> f64 {
    components
        .iter()
        .map(|&(w, m, s)| {
            let p = if s > 0.0 {
                normal::cdf((x - m) / s)
            } else if x >= m {
                1.0
            } else {
                0.0
            };
            w * p
        })
        .sum()
}

/// Bisection for `F(x) = prob` on a univariate normal mixture, to `1e-10` in probability
/// or until the bracket collapses at a point mass.
pub fn mixture_quantile(components: &[(f64, f64, f64)], prob: f64) -> f64 {
    let mut lo = components
        .iter()
        .map(|&(_, m, s)| m - 40.0 * s)
        .fold(f64::INFINITY, f64::min);
    let mut hi = components
        .iter()
        .map(|&(_, m, s)| m + 40.0 * s)
        .fold(f64::NEG_INFINITY, f64::max);
    lo -= 1e-12 * lo.abs().max(1.0);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..300 {
        mid = 0.5 * (lo + hi);
        let f = mixture_cdf(components, mid);
        if (f - prob).abs() <= 1e-10 || hi - lo <= 4.0 * f64::EPSILON * mid.abs().max(1e-300) {
            break;
        }
        if f < prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}

pub fn mixture_interval(components: &[(f64, f64, f64)], level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::BadLevel(level));
    }
    let tail = 0.5 * (1.0 - level);
    Ok((
        mixture_quantile(components, tail),
        mixture_quantile(components, 1.0 - tail),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless(w: &[f64]) -> EventStudy {
        // beta_pre with M beta_pre = w: delta_{-1} = -w_0, delta_{t-1} = delta_t - w_t.
        let k = w.len();
        let mut beta = vec![0.0; k];
        beta[k - 1] = -w[k - 1];
        for r in (0..k - 1).rev() {
            beta[r] = beta[r + 1] - w[r];
        }
        EventStudy::new(
            DVector::from_vec(beta),
            DVector::from_vec(vec![0.0]),
            DMatrix::identity(k + 1, k + 1) * 1e-12,
        )
        .unwrap()
    }

    #[test]
    fn increments_invert() {
        let es = noiseless(&[1.0, 2.0, 3.0]);
        let inc = Increments::from_event_study(&es);
        assert!((inc.w_hat - DVector::from_vec(vec![1.0, 2.0, 3.0])).amax() < 1e-14);
    }

    #[test]
    fn noiseless_mle_is_sample_moments() {
        let fit = fit_random_walk_mle(&noiseless(&[1.0, 2.0, 3.0])).unwrap();
        assert!((fit.mu_hat - 2.0).abs() < 1e-9, "{fit:?}");
        assert!((fit.sigma2_hat - 2.0 / 3.0).abs() < 1e-9, "{fit:?}");
        assert!(fit.converged && !fit.boundary);
    }

    #[test]
    fn constant_increments_hit_boundary() {
        let es = EventStudy::new(
            DVector::from_vec(vec![-2.0, -1.0]),
            DVector::from_vec(vec![0.5]),
            DMatrix::from_row_slice(3, 3, &[0.3, 0.1, 0.0, 0.1, 0.2, 0.0, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        let fit = fit_random_walk_mle(&es).unwrap();
        assert_eq!(fit.sigma2_hat, 0.0);
        assert!(fit.boundary);
        assert!((fit.mu_hat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_periods() {
        let es = EventStudy::new(
            DVector::from_vec(vec![0.1]),
            DVector::from_vec(vec![0.5]),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        assert_eq!(
            fit_random_walk_mle(&es),
            Err(Error::TooFewPeriods { needed: 2, got: 1 })
        );
    }

    #[test]
    fn fit_report_format() {
        let fit = EbFit {
            mu_hat: -0.24,
            sigma2_hat: 0.61 * 0.61,
            log_likelihood: 0.0,
            converged: true,
            boundary: false,
            n_pre: 9,
        };
        assert_eq!(fit.describe("p.p."), "drift -0.24 p.p./period, innovation s.d. 0.61");
        assert_eq!(fit.fit_line(), "μ̂ = -0.24, σ̂ = 0.61");
    }

    #[test]
    fn boundary_eb_posterior_is_trend_correction() {
        let sigma = DMatrix::from_row_slice(
            4,
            4,
            &[0.3, 0.1, 0.05, 0.0, 0.1, 0.2, 0.04, 0.02, 0.05, 0.04, 0.5, 0.1, 0.0, 0.02, 0.1, 0.4],
        );
        // Constant increments 0.5 => boundary fit with mu_hat = 0.5.
        let es = EventStudy::new(
            DVector::from_vec(vec![-1.0, -0.5]),
            DVector::from_vec(vec![1.2, 2.0]),
            sigma,
        )
        .unwrap();
        let (fit, ps) = eb_posterior(&es, 0.95).unwrap();
        assert!(fit.boundary);
        let s = es.split_covariance();
        let gamma = s.pre.clone().cholesky().unwrap().solve(&s.pre_post);
        let trend_pre = DVector::from_vec(vec![-2.0 * fit.mu_hat, -fit.mu_hat]);
        let trend_post = DVector::from_vec(vec![fit.mu_hat, 2.0 * fit.mu_hat]);
        let expected = es.beta_post() - gamma.tr_mul(&(es.beta_pre() - trend_pre)) - trend_post;
        assert!((ps.tau_mean - expected).amax() < 1e-12);
    }

    #[test]
    fn grid_validation() {
        assert_eq!(HyperPriorGrid::uniform(vec![], vec![1.0]), Err(Error::EmptyGrid));
        assert!(matches!(
            HyperPriorGrid::new(vec![0.0, 1.0], vec![1.0], vec![0.5, 0.6]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            HyperPriorGrid::uniform(vec![1.0, 0.0], vec![1.0]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            HyperPriorGrid::uniform(vec![0.0], vec![-1.0]),
            Err(Error::InvalidGrid(_))
        ));
        let g = HyperPriorGrid::uniform(linspace(-1.0, 1.0, 41), linspace(0.0, 2.0, 41)).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn hyper_config_parses() {
        let cfg: HyperGridConfig = serde_json::from_str(
            r#"{"mu":{"min":-1,"max":1,"n":21},"sigma":{"min":0,"max":2,"n":11},"weights":"uniform"}"#,
        )
        .unwrap();
        let g = cfg.to_grid().unwrap();
        assert_eq!(g.mu_grid().len(), 21);
        assert_eq!(g.sigma_grid()[10], 2.0);
        assert!(serde_json::from_str::<HyperGridConfig>(r#"{"mu":{"min":0,"max":1,"n":2}}"#).is_err());
    }

    #[test]
    fn mixture_quantile_point_masses() {
        let comps = [(0.5, -1.0, 0.0), (0.5, 1.0, 0.0)];
        let (lo, hi) = mixture_interval(&comps, 0.9).unwrap();
        assert!((lo + 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_normal_quantile() {
        let comps = [(1.0, 0.0, 1.0)];
        let (lo, hi) = mixture_interval(&comps, 0.95).unwrap();
        assert!((hi - 1.959963984540054).abs() < 1e-8);
        assert!((lo + 1.959963984540054).abs() < 1e-8);
    }
}
