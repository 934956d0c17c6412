mod common;

use bt_core::eb::Increments;
use bt_core::{
    coverage_experiment, eb_posterior, mle_consistency_experiment, simulate_event_study, DMatrix, DVector, DgpSpec,
    Error, Method, PriorSpec,
};
use common::*;

fn dgp(prior: PriorSpec, t_pre: usize, t_post: usize, sigma: DMatrix<f64>, seed: u64) -> DgpSpec {
    DgpSpec {
        prior,
        tau_post: (1..=t_post).map(|t| 0.1 * t as f64).collect(),
        sigma,
        t_pre,
        t_post,
        seed,
    }
}

#[test]
fn simulated_estimates_have_the_model_moments() {
    let (t_pre, t_post) = (2, 2);
    let prior = PriorSpec::RandomWalk { mu: 0.3, sigma2: 0.5 };
    let sigma = random_pd(4, 0.2, &mut rng(12));
    let spec = dgp(prior.clone(), t_pre, t_post, sigma.clone(), 5);
    let law = prior.build(t_pre, t_post).unwrap();
    let mut mean = law.mean().clone();
    for t in 0..t_post {
        mean[t_pre + t] += spec.tau_post[t];
    }
    let cov = law.cov() + &sigma;

    let n = 100_000;
    let draws: Vec<DVector<f64>> = (0..n).map(|i| simulate_event_study(&spec, i).unwrap().beta()).collect();
    let nf = n as f64;
    let m = draws.iter().fold(DVector::zeros(4), |a, d| a + d) / nf;
    let mut c = DMatrix::zeros(4, 4);
    for d in &draws {
        let e = d - &m;
        c += &e * e.transpose();
    }
    c /= nf - 1.0;
    for i in 0..4 {
        let se = (cov[(i, i)] / nf).sqrt();
        assert!((m[i] - mean[i]).abs() < 4.0 * se, "mean {i}: {} vs {}", m[i], mean[i]);
        for j in 0..4 {
            let se = ((cov[(i, i)] * cov[(j, j)] + cov[(i, j)].powi(2)) / nf).sqrt();
            assert!((c[(i, j)] - cov[(i, j)]).abs() < 4.0 * se, "cov ({i},{j}): {} vs {}", c[(i, j)], cov[(i, j)]);
        }
    }
}

#[test]
fn differenced_pre_trends_recover_drift_and_innovation_variance() {
    let t_pre = 8;
    let spec = dgp(
        PriorSpec::RandomWalk { mu: -0.4, sigma2: 1.5 },
        t_pre,
        1,
        DMatrix::identity(t_pre + 1, t_pre + 1) * 1e-14,
        77,
    );
    let mut all = Vec::new();
    for i in 0..20_000 {
        let es = simulate_event_study(&spec, i).unwrap();
        all.extend(Increments::from_event_study(&es).w_hat.iter().copied());
    }
    let n = all.len() as f64;
    let mean = all.iter().sum::<f64>() / n;
    let var = all.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1.0);
    // Increments of one path are independent, so pooled draws are iid.
    assert!((mean + 0.4).abs() < 3.0 * (1.5 / n).sqrt(), "{mean}");
    assert!((var - 1.5).abs() < 3.0 * 1.5 * (2.0 / n).sqrt(), "{var}");
}

#[test]
fn ols_is_calibrated_without_violations() {
    let spec = dgp(PriorSpec::RandomWalk { mu: 0.0, sigma2: 0.0 }, 3, 2, random_pd(5, 0.1, &mut rng(2)), 9);
    let r = coverage_experiment(&spec, Method::Ols, 4000, 0.95).unwrap();
    for (c, se) in r.coverage.iter().zip(&r.se) {
        assert!((c - 0.95).abs() < 4.0 * se.max(0.003), "{r:?}");
    }
}

#[test]
fn ols_breaks_down_under_deterministic_drift() {
    let spec = dgp(PriorSpec::RandomWalk { mu: 0.5, sigma2: 0.0 }, 4, 3, DMatrix::identity(7, 7) * 0.01, 3);
    let ols = coverage_experiment(&spec, Method::Ols, 500, 0.95).unwrap();
    assert!(ols.coverage[2] < 0.05, "{ols:?}");
    assert!((ols.bias[2] - 1.5).abs() < 0.05);
    let bayes = coverage_experiment(&spec, Method::BayesKnownPrior, 2000, 0.95).unwrap();
    for c in &bayes.coverage {
        assert!((c - 0.95).abs() < 0.02, "{bayes:?}");
    }
}

#[test]
fn known_prior_intervals_are_calibrated_under_ar1() {
    let spec = dgp(PriorSpec::Ar1 { rho: 0.7, sigma_eps2: 0.3 }, 4, 3, random_pd(7, 0.1, &mut rng(6)), 21);
    let r = coverage_experiment(&spec, Method::BayesKnownPrior, 5000, 0.95).unwrap();
    for c in &r.coverage {
        assert!((0.935..=0.965).contains(c), "{r:?}");
    }
}

#[test]
fn coverage_report_is_seed_deterministic() {
    let spec = dgp(PriorSpec::RandomWalk { mu: 0.1, sigma2: 0.2 }, 3, 2, DMatrix::identity(5, 5) * 0.05, 4);
    let a = coverage_experiment(&spec, Method::Eb, 200, 0.9).unwrap();
    let b = coverage_experiment(&spec, Method::Eb, 200, 0.9).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    let c = coverage_experiment(&DgpSpec { seed: 5, ..spec }, Method::Eb, 200, 0.9).unwrap();
    assert_ne!(a.to_csv(), c.to_csv());
    assert!(a.to_csv().starts_with("period,method,level,coverage,mean_length,bias,se\n1,eb,0.9,"));
}

#[test]
fn coverage_experiment_rejects_bad_configs() {
    let spec = dgp(PriorSpec::RandomWalk { mu: 0.0, sigma2: 0.1 }, 2, 1, DMatrix::identity(3, 3), 0);
    assert!(matches!(coverage_experiment(&spec, Method::Ols, 99, 0.95), Err(Error::InvalidArgument(_))));
    assert!(matches!(coverage_experiment(&spec, Method::Ols, 100, 1.0), Err(Error::BadLevel(_))));
    let bad = DgpSpec { sigma: DMatrix::identity(4, 4), ..spec.clone() };
    assert!(coverage_experiment(&bad, Method::Ols, 100, 0.95).is_err());
    // One pre-period cannot identify an increment variance.
    let short = dgp(PriorSpec::RandomWalk { mu: 0.0, sigma2: 0.1 }, 1, 1, DMatrix::identity(2, 2), 0);
    assert!(matches!(
        coverage_experiment(&short, Method::Eb, 100, 0.95),
        Err(Error::Replication { index: 0, .. })
    ));
}

#[test]
fn noiseless_drift_is_recovered_exactly() {
    let rows = mle_consistency_experiment(0.7, 0.0, 1e-16, &[5, 20], 50, 1).unwrap();
    for r in rows {
        assert!(r.median_abs_mu_error < 1e-6, "{r:?}");
        assert!(r.median_abs_sigma2_error < 1e-6, "{r:?}");
    }
}

#[test]
fn hyperparameter_errors_shrink_with_more_pre_periods() {
    let rows = mle_consistency_experiment(-0.24, 0.3721, 0.01, &[10, 40, 160], 200, 11).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].median_abs_mu_error <= w[0].median_abs_mu_error, "{rows:?}");
        assert!(w[1].median_abs_sigma2_error <= w[0].median_abs_sigma2_error, "{rows:?}");
    }
}

#[test]
fn consistency_medians_are_stable_in_replication_count() {
    let a = mle_consistency_experiment(-0.24, 0.3721, 0.01, &[40], 200, 2).unwrap();
    let b = mle_consistency_experiment(-0.24, 0.3721, 0.01, &[40], 400, 2).unwrap();
    let rel = |x: f64, y: f64| (x - y).abs() / y;
    assert!(rel(a[0].median_abs_mu_error, b[0].median_abs_mu_error) < 0.2, "{a:?} {b:?}");
    assert!(rel(a[0].median_abs_sigma2_error, b[0].median_abs_sigma2_error) < 0.2, "{a:?} {b:?}");
}

#[test]
fn eb_posterior_tracks_truth_with_long_pre_period() {
    let t_pre = 200;
    let spec = dgp(
        PriorSpec::RandomWalk { mu: 0.2, sigma2: 0.04 },
        t_pre,
        2,
        DMatrix::identity(t_pre + 2, t_pre + 2) * 0.01,
        31,
    );
    let mut inside = 0;
    for i in 0..500 {
        let es = simulate_event_study(&spec, i).unwrap();
        let (_, ps) = eb_posterior(&es, 0.95).unwrap();
        let sd = ps.tau_sd();
        if (0..2).all(|t| (ps.tau_mean[t] - spec.tau_post[t]).abs() <= 3.0 * sd[t]) {
            inside += 1;
        }
    }
    assert!(inside >= 495, "{inside}/500");
}
