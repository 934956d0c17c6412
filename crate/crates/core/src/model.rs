//! Observable data model of an event study.
//!
//! The estimated coefficients decompose as `beta = (0, tau_post) + (delta_pre, delta_post)`
//! with `beta_hat ~ N(beta, sigma)`. Pre-periods are labelled `-T_pre..=-1`, post-periods
//! `1..=T_post`; period 0 is the omitted reference period where the trend violation is
//! normalized to zero.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::serde_mat::{matrix_to_rows, rows_to_matrix};

/// Eigenvalue slack, relative to the largest entry, when checking a prior covariance.
pub const PSD_TOL: f64 = 1e-10;

/// Event-study estimates with their joint sampling covariance (pre-then-post ordering).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEventStudy", into = "RawEventStudy")]
pub struct EventStudy {
    pre_periods: Vec<i64>,
    post_periods: Vec<i64>,
    beta_pre: DVector<f64>,
    beta_post: DVector<f64>,
    sigma: DMatrix<f64>,
}

/// Unvalidated event-study candidate, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEventStudy {
    pub pre_periods: Vec<i64>,
    pub post_periods: Vec<i64>,
    pub beta_pre: Vec<f64>,
    pub beta_post: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
}

/// The three blocks of the sampling covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceBlocks {
    pub pre: DMatrix<f64>,
    pub post: DMatrix<f64>,
    pub pre_post: DMatrix<f64>,
}

impl CovarianceBlocks {
    pub fn reassemble(&self) -> DMatrix<f64> {
        let (np, nq) = (self.pre.nrows(), self.post.nrows());
        let mut m = DMatrix::zeros(np + nq, np + nq);
        m.view_mut((0, 0), (np, np)).copy_from(&self.pre);
        m.view_mut((np, np), (nq, nq)).copy_from(&self.post);
        m.view_mut((0, np), (np, nq)).copy_from(&self.pre_post);
        m.view_mut((np, 0), (nq, np)).copy_from(&self.pre_post.transpose());
        m
    }
}

fn check_periods(pre: &[i64], post: &[i64]) -> Result<()> {
    if pre.is_empty() || post.is_empty() {
        return Err(Error::BadPeriods(
            "need at least one pre-period and one post-period".into(),
        ));
    }
    let t_pre = pre.len() as i64;
    let expected_pre: Vec<i64> = (-t_pre..=-1).collect();
    if pre != expected_pre.as_slice() {
        return Err(Error::BadPeriods(format!(
            "pre-periods must be {}..=-1 in order, got {pre:?}",
            -t_pre
        )));
    }
    let expected_post: Vec<i64> = (1..=post.len() as i64).collect();
    if post != expected_post.as_slice() {
        return Err(Error::BadPeriods(format!(
            "post-periods must be 1..={} in order, got {post:?}",
            post.len()
        )));
    }
    Ok(())
}

impl EventStudy {
    /// Validates a candidate: dimensions, period labels, finiteness, and positive
    /// definiteness of the symmetrized covariance `(sigma + sigmaᵀ)/2`.
    pub fn validate(raw: RawEventStudy) -> Result<Self> {
        let t_pre = raw.beta_pre.len();
        let t_post = raw.beta_post.len();
        if raw.pre_periods.len() != t_pre {
            return Err(Error::DimensionMismatch(format!(
                "{} pre-period labels but {t_pre} pre coefficients",
                raw.pre_periods.len()
            )));
        }
        if raw.post_periods.len() != t_post {
            return Err(Error::DimensionMismatch(format!(
                "{} post-period labels but {t_post} post coefficients",
                raw.post_periods.len()
            )));
        }
        let sigma = rows_to_matrix(&raw.sigma).map_err(Error::DimensionMismatch)?;
        let n = t_pre + t_post;
        if sigma.nrows() != n || sigma.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "sigma is {}x{}, expected {n}x{n}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        check_periods(&raw.pre_periods, &raw.post_periods)?;
        if raw
            .beta_pre
            .iter()
            .chain(&raw.beta_post)
            .chain(sigma.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("event study".into()));
        }
        let sigma = linalg::symmetrize(&sigma);
        if !linalg::is_positive_definite(&sigma) {
            return Err(Error::NotPositiveDefinite("sigma".into()));
        }
        Ok(Self {
            pre_periods: raw.pre_periods,
            post_periods: raw.post_periods,
            beta_pre: DVector::from_vec(raw.beta_pre),
            beta_post: DVector::from_vec(raw.beta_post),
            sigma,
        })
    }

    /// Convenience constructor with the standard period labels.
    pub fn new(beta_pre: DVector<f64>, beta_post: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let t_pre = beta_pre.len() as i64;
        let t_post = beta_post.len() as i64;
        Self::validate(RawEventStudy {
            pre_periods: (-t_pre..=-1).collect(),
            post_periods: (1..=t_post).collect(),
            beta_pre: beta_pre.iter().copied().collect(),
            beta_post: beta_post.iter().copied().collect(),
            sigma: matrix_to_rows(&sigma),
        })
    }

    pub fn t_pre(&self) -> usize {
        self.beta_pre.len()
    }

    pub fn t_post(&self) -> usize {
        self.beta_post.len()
    }

    pub fn dim(&self) -> usize {
        self.t_pre() + self.t_post()
    }

    pub fn pre_periods(&self) -> &[i64] {
        &self.pre_periods
    }

    pub fn post_periods(&self) -> &[i64] {
        &self.post_periods
    }

    /// Pre-period labels followed by post-period labels.
    pub fn periods(&self) -> Vec<i64> {
        self.pre_periods.iter().chain(&self.post_periods).copied().collect()
    }

    pub fn beta_pre(&self) -> &DVector<f64> {
        &self.beta_pre
    }

    pub fn beta_post(&self) -> &DVector<f64> {
        &self.beta_post
    }

    /// Stacked `(beta_pre, beta_post)`.
    pub fn beta(&self) -> DVector<f64> {
        let mut b = DVector::zeros(self.dim());
        b.rows_mut(0, self.t_pre()).copy_from(&self.beta_pre);
        b.rows_mut(self.t_pre(), self.t_post()).copy_from(&self.beta_post);
        b
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn split_covariance(&self) -> CovarianceBlocks {
        let (p, q) = (self.t_pre(), self.t_post());
        CovarianceBlocks {
            pre: linalg::block(&self.sigma, 0, 0, p, p),
            post: linalg::block(&self.sigma, p, p, q, q),
            pre_post: linalg::block(&self.sigma, 0, p, p, q),
        }
    }

    pub fn to_raw(&self) -> RawEventStudy {
        self.clone().into()
    }
}

impl TryFrom<RawEventStudy> for EventStudy {
    type Error = Error;

    fn try_from(raw: RawEventStudy) -> Result<Self> {
        Self::validate(raw)
    }
}

impl From<EventStudy> for RawEventStudy {
    fn from(es: EventStudy) -> Self {
        RawEventStudy {
            beta_pre: es.beta_pre.iter().copied().collect(),
            beta_post: es.beta_post.iter().copied().collect(),
            sigma: matrix_to_rows(&es.sigma),
            pre_periods: es.pre_periods,
            post_periods: es.post_periods,
        }
    }
}

/// Gaussian prior over the stacked violation vector `delta = (delta_pre, delta_post)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGaussianPrior", into = "RawGaussianPrior")]
pub struct GaussianPrior {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGaussianPrior {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl GaussianPrior {
    /// Symmetrizes `cov` and requires it to be positive semidefinite.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "prior covariance is {}x{}, mean has length {n}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("prior".into()));
        }
        let cov = linalg::symmetrize(&cov);
        if !linalg::is_positive_semidefinite(&cov, PSD_TOL) {
            return Err(Error::NotPositiveSemidefinite("prior covariance".into()));
        }
        Ok(Self { mean, cov })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub(crate) fn check_matches(&self, es: &EventStudy) -> Result<()> {
        if self.dim() != es.dim() {
            return Err(Error::DimensionMismatch(format!(
                "prior has dimension {}, event study has {} periods",
                self.dim(),
                es.dim()
            )));
        }
        Ok(())
    }

    /// Returns a copy with `shift` added to the post-period block of the mean.
    pub fn shift_post_mean(&self, t_pre: usize, shift: f64) -> Self {
        let mut out = self.clone();
        let n = out.mean.len();
        for i in t_pre..n {
            out.mean[i] += shift;
        }
        out
    }
}

impl TryFrom<RawGaussianPrior> for GaussianPrior {
    type Error = Error;

    fn try_from(raw: RawGaussianPrior) -> Result<Self> {
        let cov = rows_to_matrix(&raw.cov).map_err(Error::DimensionMismatch)?;
        Self::new(DVector::from_vec(raw.mean), cov)
    }
}

impl From<GaussianPrior> for RawGaussianPrior {
    fn from(p: GaussianPrior) -> Self {
        RawGaussianPrior {
            mean: p.mean.iter().copied().collect(),
            cov: matrix_to_rows(&p.cov),
        }
    }
}

/// Structured prior specification for the violation vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    Explicit(GaussianPrior),
    /// Increments `delta_t - delta_{t-1}` iid `N(mu, sigma2)`, anchored at `delta_0 = 0`.
    RandomWalk { mu: f64, sigma2: f64 },
    /// Stationary AR(1) conditioned on `delta_0 = 0`.
    #[serde(rename = "ar1")]
    Ar1 { rho: f64, sigma_eps2: f64 },
}

impl PriorSpec {
    /// Materializes the Gaussian law of `delta` for the given numbers of periods.
    pub fn build(&self, t_pre: usize, t_post: usize) -> Result<GaussianPrior> {
        match self {
            PriorSpec::Explicit(p) => {
                if p.dim() != t_pre + t_post {
                    return Err(Error::DimensionMismatch(format!(
                        "explicit prior has dimension {}, expected {}",
                        p.dim(),
                        t_pre + t_post
                    )));
                }
                Ok(p.clone())
            }
            PriorSpec::RandomWalk { mu, sigma2 } => {
                crate::priors::random_walk_prior(*mu, *sigma2, t_pre, t_post)
            }
            PriorSpec::Ar1 { rho, sigma_eps2 } => {
                crate::priors::ar1_prior(*rho, *sigma_eps2, t_pre, t_post)
            }
        }
    }
}

/// Equal-tailed marginal credible interval for one post period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleInterval {
    pub period: i64,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Posterior for the post-period treatment effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub post_periods: Vec<i64>,
    #[serde(with = "crate::serde_mat::vector")]
    pub tau_mean: DVector<f64>,
    #[serde(with = "crate::serde_mat::matrix")]
    pub tau_cov: DMatrix<f64>,
    #[serde(with = "crate::serde_mat::vector")]
    pub delta_post_mean: DVector<f64>,
    #[serde(with = "crate::serde_mat::vector")]
    pub beta_pre_star: DVector<f64>,
    #[serde(default)]
    pub intervals: Vec<CredibleInterval>,
}

impl PosteriorSummary {
    pub fn tau_sd(&self) -> DVector<f64> {
        self.tau_cov.diagonal().map(|v| v.max(0.0).sqrt())
    }

    /// Attaches per-period equal-tailed credible intervals at `level`.
    pub fn with_credible_sets(mut self, level: f64) -> Result<Self> {
        self.intervals = crate::inference::credible_set(&self, level)?;
        Ok(self)
    }
}
