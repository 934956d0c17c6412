//! Synthetic event studies from known data-generating processes, and the coverage and
//! consistency experiments built on them.
//!
//! Replication `i` of a run seeded with `s` draws from ChaCha20 stream `i` of seed `s`, so
//! results do not depend on how replications are scheduled across threads.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eb::{self, HyperPriorGrid};
use crate::error::{Error, Result};
use crate::inference::{self, posterior};
use crate::linalg;
use crate::model::{CredibleInterval, EventStudy, GaussianPrior, PriorSpec};

/// Data-generating process: `delta ~ prior`, `beta_hat ~ N((delta_pre, tau + delta_post), sigma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub prior: PriorSpec,
    pub tau_post: Vec<f64>,
    #[serde(with = "crate::serde_mat::matrix")]
    pub sigma: DMatrix<f64>,
    pub t_pre: usize,
    pub t_post: usize,
    #[serde(default)]
    pub seed: u64,
}

/// A validated DGP with its covariance factors precomputed.
#[derive(Debug, Clone)]
pub struct PreparedDgp {
    spec: DgpSpec,
    prior: GaussianPrior,
    prior_factor: DMatrix<f64>,
    sigma_factor: DMatrix<f64>,
}

impl PreparedDgp {
    pub fn new(spec: &DgpSpec) -> Result<Self> {
        let n = spec.t_pre + spec.t_post;
        if spec.t_pre == 0 || spec.t_post == 0 {
            return Err(Error::BadPeriods("need at least one pre and one post period".into()));
        }
        if spec.tau_post.len() != spec.t_post {
            return Err(Error::DimensionMismatch(format!(
                "tau_post has {} entries, expected {}",
                spec.tau_post.len(),
                spec.t_post
            )));
        }
        if spec.sigma.nrows() != n || spec.sigma.ncols() != n {
            return Err(Error::DimensionMismatch(format!("sigma must be {n}x{n}")));
        }
        let sigma = linalg::symmetrize(&spec.sigma);
        let sigma_chol = linalg::cholesky(&sigma).ok_or_else(|| Error::NotPositiveDefinite("sigma".into()))?;
        let prior = spec.prior.build(spec.t_pre, spec.t_post)?;
        Ok(Self {
            prior_factor: linalg::psd_factor(prior.cov()),
            sigma_factor: sigma_chol.unpack(),
            prior,
            spec: DgpSpec { sigma, ..spec.clone() },
        })
    }

    pub fn spec(&self) -> &DgpSpec {
        &self.spec
    }

    /// Gaussian law of `delta` under the DGP.
    pub fn prior(&self) -> &GaussianPrior {
        &self.prior
    }

    /// Draws replication `index`; a pure function of `(seed, index)`.
    pub fn simulate(&self, index: u64) -> Result<EventStudy> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(index);
        let n = self.spec.t_pre + self.spec.t_post;
        let mut normals = || DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let z_delta: DVector<f64> = normals();
        let z_eps: DVector<f64> = normals();
        let mut beta = self.prior.mean() + &self.prior_factor * z_delta;
        for (t, tau) in self.spec.tau_post.iter().enumerate() {
            beta[self.spec.t_pre + t] += tau;
        }
        let beta_hat = beta + &self.sigma_factor * z_eps;
        EventStudy::new(
            beta_hat.rows(0, self.spec.t_pre).into_owned(),
            beta_hat.rows(self.spec.t_pre, self.spec.t_post).into_owned(),
            self.spec.sigma.clone(),
        )
    }
}

pub fn simulate_event_study(dgp: &DgpSpec, replication_index: u64) -> Result<EventStudy> {
    PreparedDgp::new(dgp)?.simulate(replication_index)
}

/// Interval-producing procedure evaluated by [`coverage_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Flat-`tau` posterior under the DGP's own law of `delta`.
    BayesKnownPrior,
    /// Plug-in empirical Bayes with the random-walk model.
    Eb,
    /// Hierarchical Bayes with the default uniform hyper-prior grid.
    Hierarchical,
    /// `beta_hat_post ± z sd`, valid only without violations.
    Ols,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::BayesKnownPrior => "bayes_known_prior",
            Method::Eb => "eb",
            Method::Hierarchical => "hierarchical",
            Method::Ols => "ols",
        }
    }

    /// Point estimates and intervals for one event study.
    pub fn run(self, es: &EventStudy, known_prior: &GaussianPrior, level: f64) -> Result<(DVector<f64>, Vec<CredibleInterval>)> {
        match self {
            Method::BayesKnownPrior => {
                let ps = posterior(es, known_prior)?.with_credible_sets(level)?;
                Ok((ps.tau_mean, ps.intervals))
            }
            Method::Eb => {
                let (_, ps) = eb::eb_posterior(es, level)?;
                Ok((ps.tau_mean, ps.intervals))
            }
            Method::Hierarchical => {
                let grid = HyperPriorGrid::default_for(es)?;
                let (_, ps) = eb::hierarchical_posterior(es, &grid, level)?;
                Ok((ps.tau_mean, ps.intervals))
            }
            Method::Ols => Ok((es.beta_post().clone(), inference::ols_intervals(es, level)?)),
        }
    }
}

/// Per-period calibration of one method over repeated draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub method: Method,
    pub level: f64,
    pub n_reps: usize,
    pub periods: Vec<i64>,
    pub coverage: Vec<f64>,
    pub mean_length: Vec<f64>,
    pub bias: Vec<f64>,
    /// Monte Carlo standard error of each coverage rate.
    pub se: Vec<f64>,
}

impl CoverageReport {
    pub const CSV_HEADER: &'static str = "period,method,level,coverage,mean_length,bias,se";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for t in 0..self.periods.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.periods[t],
                self.method.name(),
                self.level,
                self.coverage[t],
                self.mean_length[t],
                self.bias[t],
                self.se[t]
            ));
        }
        out
    }
}

struct RepOutcome {
    covered: Vec<bool>,
    length: Vec<f64>,
    error: Vec<f64>,
}

/// Simulates `n_reps` event studies, runs `method` on each, and tabulates whether each
/// per-period interval covers the true `tau_post`. The first failing replication (in index
/// order) aborts the experiment.
pub fn coverage_experiment(dgp: &DgpSpec, method: Method, n_reps: usize, level: f64) -> Result<CoverageReport> {
    if n_reps < 100 {
        return Err(Error::InvalidArgument("coverage experiments need n_reps >= 100".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::BadLevel(level));
    }
    let prepared = PreparedDgp::new(dgp)?;
    let truth = &prepared.spec().tau_post;
    let outcomes: Vec<Result<RepOutcome>> = (0..n_reps as u64)
        .into_par_iter()
        .map(|i| {
            let wrap = |e: Error| Error::Replication {
                index: i,
                source: Box::new(e),
            };
            let es = prepared.simulate(i).map_err(wrap)?;
            let (est, intervals) = method.run(&es, prepared.prior(), level).map_err(wrap)?;
            Ok(RepOutcome {
                covered: intervals
                    .iter()
                    .zip(truth)
                    .map(|(ci, &t)| ci.lower <= t && t <= ci.upper)
                    .collect(),
                length: intervals.iter().map(|ci| ci.upper - ci.lower).collect(),
                error: est.iter().zip(truth).map(|(e, t)| e - t).collect(),
            })
        })
        .collect();

    let q = dgp.t_post;
    let mut hits = vec![0usize; q];
    let mut length = vec![0.0; q];
    let mut bias = vec![0.0; q];
    for outcome in outcomes {
        let o = outcome?;
        for t in 0..q {
            hits[t] += o.covered[t] as usize;
            length[t] += o.length[t];
            bias[t] += o.error[t];
        }
    }
    let nf = n_reps as f64;
    let coverage: Vec<f64> = hits.iter().map(|&h| h as f64 / nf).collect();
    Ok(CoverageReport {
        method,
        level,
        n_reps,
        periods: (1..=q as i64).collect(),
        se: coverage.iter().map(|c| (c * (1.0 - c) / nf).sqrt()).collect(),
        coverage,
        mean_length: length.iter().map(|l| l / nf).collect(),
        bias: bias.iter().map(|b| b / nf).collect(),
    })
}

/// Median absolute hyperparameter errors at one number of pre-periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub t_pre: usize,
    pub n_reps: usize,
    pub median_abs_mu_error: f64,
    pub median_abs_sigma2_error: f64,
    pub boundary_fraction: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fits the random-walk MLE on simulated pre-trends with `Sigma = sigma_scale * I` for each
/// entry of `t_pre_list`.
pub fn mle_consistency_experiment(
    true_mu: f64,
    true_sigma2: f64,
    sigma_scale: f64,
    t_pre_list: &[usize],
    n_reps: usize,
    seed: u64,
) -> Result<Vec<ConsistencyRow>> {
    if t_pre_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("t_pre_list must be ascending".into()));
    }
    if n_reps == 0 {
        return Err(Error::InvalidArgument("n_reps must be positive".into()));
    }
    t_pre_list
        .iter()
        .map(|&t_pre| {
            let spec = DgpSpec {
                prior: PriorSpec::RandomWalk {
                    mu: true_mu,
                    sigma2: true_sigma2,
                },
                tau_post: vec![0.0],
                sigma: DMatrix::identity(t_pre + 1, t_pre + 1) * sigma_scale,
                t_pre,
                t_post: 1,
                seed,
            };
            let prepared = PreparedDgp::new(&spec)?;
            let fits: Vec<Result<eb::EbFit>> = (0..n_reps as u64)
                .into_par_iter()
                .map(|i| {
                    let es = prepared.simulate(i)?;
                    eb::fit_random_walk_mle(&es).map_err(|e| Error::Replication {
                        index: i,
                        source: Box::new(e),
                    })
                })
                .collect();
            let fits: Vec<eb::EbFit> = fits.into_iter().collect::<Result<_>>()?;
            Ok(ConsistencyRow {
                t_pre,
                n_reps,
                median_abs_mu_error: median(fits.iter().map(|f| (f.mu_hat - true_mu).abs()).collect()),
                median_abs_sigma2_error: median(
                    fits.iter().map(|f| (f.sigma2_hat - true_sigma2).abs()).collect(),
                ),
                boundary_fraction: fits.iter().filter(|f| f.boundary).count() as f64 / n_reps as f64,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(prior: PriorSpec, sigma_scale: f64) -> DgpSpec {
        DgpSpec {
            prior,
            tau_post: vec![1.0],
            sigma: DMatrix::identity(3, 3) * sigma_scale,
            t_pre: 2,
            t_post: 1,
            seed: 7,
        }
    }

    #[test]
    fn noiseless_no_violation() {
        let s = spec(PriorSpec::RandomWalk { mu: 0.0, sigma2: 0.0 }, 1e-18);
        let es = simulate_event_study(&s, 3).unwrap();
        assert!(es.beta_pre().amax() < 1e-8);
        assert!((es.beta_post()[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn deterministic_per_index() {
        let s = spec(PriorSpec::Ar1 { rho: 0.5, sigma_eps2: 1.0 }, 0.5);
        let a = simulate_event_study(&s, 11).unwrap();
        let b = simulate_event_study(&s, 11).unwrap();
        let c = simulate_event_study(&s, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn dgp_validation() {
        let mut s = spec(PriorSpec::RandomWalk { mu: 0.0, sigma2: 1.0 }, 1.0);
        s.tau_post = vec![1.0, 2.0];
        assert!(matches!(PreparedDgp::new(&s), Err(Error::DimensionMismatch(_))));
        let mut s = spec(PriorSpec::RandomWalk { mu: 0.0, sigma2: 1.0 }, 1.0);
        s.sigma[(0, 1)] = 5.0;
        assert!(matches!(PreparedDgp::new(&s), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn coverage_needs_reps() {
        let s = spec(PriorSpec::RandomWalk { mu: 0.0, sigma2: 1.0 }, 1.0);
        assert!(matches!(coverage_experiment(&s, Method::Ols, 10, 0.95), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn replication_failure_names_index() {
        // eb needs two pre-periods.
        let s = DgpSpec {
            t_pre: 1,
            sigma: DMatrix::identity(2, 2),
            ..spec(PriorSpec::RandomWalk { mu: 0.0, sigma2: 1.0 }, 1.0)
        };
        match coverage_experiment(&s, Method::Eb, 100, 0.95) {
            Err(Error::Replication { index, source }) => {
                assert_eq!(index, 0);
                assert!(matches!(*source, Error::TooFewPeriods { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn report_csv_layout() {
        let s = spec(PriorSpec::RandomWalk { mu: 0.0, sigma2: 0.0 }, 1.0);
        let r = coverage_experiment(&s, Method::Ols, 200, 0.9).unwrap();
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CoverageReport::CSV_HEADER));
        assert!(lines.next().unwrap().starts_with("1,ols,0.9,"));
    }
}
