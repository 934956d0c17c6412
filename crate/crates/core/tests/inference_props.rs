mod common;

use bt_core::linalg::{rel_diff, rel_diff_vec};
use bt_core::{
    posterior_closed_form, posterior_covariance_form, posterior_information_form, DMatrix, DVector, GaussianPrior,
    TauPrior,
};
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn closed_and_information_forms_agree(seed in any::<u64>(), t_pre in 1usize..=4, t_post in 1usize..=4) {
        let mut r = rng(seed);
        let (es, prior) = random_instance(t_pre, t_post, &mut r);
        let cf = posterior_closed_form(&es, &prior).unwrap();
        let jp = posterior_information_form(&es, &prior, &TauPrior::Flat).unwrap();
        prop_assert!(rel_diff_vec(&cf.tau_mean, &jp.tau_mean()) < 1e-8);
        prop_assert!(rel_diff(&cf.tau_cov, &jp.tau_cov()) < 1e-8);
        let cov_form = posterior_covariance_form(&es, &prior).unwrap();
        prop_assert!(rel_diff_vec(&cf.tau_mean, &cov_form.tau_mean) < 1e-8);
        prop_assert!(rel_diff(&cf.tau_cov, &cov_form.tau_cov) < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tau_cov_symmetric_psd(seed in any::<u64>(), t_pre in 1usize..=5, t_post in 1usize..=5) {
        let mut r = rng(seed);
        let (es, prior) = random_instance(t_pre, t_post, &mut r);
        let cf = posterior_closed_form(&es, &prior).unwrap();
        prop_assert_eq!(cf.tau_cov.clone(), cf.tau_cov.transpose());
        let eig = cf.tau_cov.symmetric_eigenvalues();
        prop_assert!(eig.min() >= -1e-12 * cf.tau_cov.amax());
    }

    #[test]
    fn shifting_post_prior_mean_shifts_tau(seed in any::<u64>(), c in -5.0f64..5.0) {
        let mut r = rng(seed);
        let (es, prior) = random_instance(3, 2, &mut r);
        let base = posterior_closed_form(&es, &prior).unwrap();
        let shifted = posterior_closed_form(&es, &prior.shift_post_mean(3, c)).unwrap();
        let diff = &shifted.tau_mean - &base.tau_mean;
        for d in diff.iter() {
            prop_assert!((d + c).abs() < 1e-10 * (1.0 + c.abs() + base.tau_mean.amax()));
        }
        prop_assert!(rel_diff(&shifted.tau_cov, &base.tau_cov) < 1e-12);
    }

    #[test]
    fn proper_tau_prior_converges_to_flat(seed in any::<u64>(), t_pre in 1usize..=3, t_post in 1usize..=3) {
        let mut r = rng(seed);
        let (es, prior) = random_instance(t_pre, t_post, &mut r);
        let flat = posterior_information_form(&es, &prior, &TauPrior::Flat).unwrap();
        let mut last = f64::INFINITY;
        for kappa in [1e2, 1e4, 1e6, 1e8] {
            let tp = TauPrior::Gaussian { mean: DVector::zeros(t_post), cov: DMatrix::identity(t_post, t_post) * kappa };
            let jp = posterior_information_form(&es, &prior, &tp).unwrap();
            let err = rel_diff_vec(&jp.tau_mean(), &flat.tau_mean()).max(rel_diff(&jp.tau_cov(), &flat.tau_cov()));
            prop_assert!(err < last || err < 1e-12, "kappa {kappa}: {err} vs {last}");
            last = err;
        }
        prop_assert!(last < 1e-4);
    }
}

#[test]
fn concentrated_prior_gives_gls_correction() {
    let mut r = rng(21);
    for _ in 0..20 {
        let (es, _) = random_instance(3, 2, &mut r);
        let prior = GaussianPrior::new(DVector::zeros(5), DMatrix::identity(5, 5) * 1e-10).unwrap();
        let ps = posterior_closed_form(&es, &prior).unwrap();
        let s = es.split_covariance();
        let gamma = s.pre.clone().cholesky().unwrap().solve(&s.pre_post);
        let expected = es.beta_post() - gamma.tr_mul(es.beta_pre());
        assert!((ps.tau_mean - expected).amax() < 1e-8);
    }
}
