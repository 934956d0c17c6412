//! Bayesian and empirical-Bayes inference on post-treatment effects in event studies
//! where parallel trends may fail.
//!
//! The observed coefficients satisfy `beta_hat ~ N((0, tau_post) + delta, Sigma)`. A prior
//! on the violation vector `delta` (explicit Gaussian, random walk with drift, or AR(1)),
//! combined with a flat prior on `tau_post`, gives a Gaussian posterior for the treatment
//! effects. The random-walk hyperparameters can also be estimated from the pre-trends
//! ([`eb`]) or integrated over a hyper-prior grid.
//!
//! [`oracle`] holds brute-force reference computations and [`simulate`] the coverage and
//! consistency harnesses.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eb;
pub mod error;
pub mod inference;
pub mod linalg;
pub mod model;
pub mod normal;
pub mod oracle;
pub mod priors;
pub mod serde_mat;
pub mod simulate;

pub use eb::{
    eb_posterior, fit_random_walk_mle, hierarchical_posterior, EbFit, HyperGridConfig, HyperPosterior,
    HyperPriorGrid,
};
pub use error::{Error, ErrorClass, Result};
pub use inference::{
    credible_set, ols_intervals, posterior, posterior_closed_form, posterior_covariance_form,
    posterior_information_form, JointPosterior, TauPrior,
};
pub use model::{
    CovarianceBlocks, CredibleInterval, EventStudy, GaussianPrior, PosteriorSummary, PriorSpec, RawEventStudy,
};
pub use priors::{ar1_prior, differencing_matrix, random_walk_prior};
pub use simulate::{
    coverage_experiment, mle_consistency_experiment, simulate_event_study, CoverageReport, DgpSpec, Method,
};

pub use nalgebra::{DMatrix, DVector};
