use nalgebra::{DMatrix, DVector};
use pivalue::glm::{
    fisher_information, fit_irls, log_likelihood, scale_estimates, score, Family, IrlsOptions, Link, ModelData,
};
use pivalue::numerics::RngStream;
use pivalue::replication::simulate_response;
use proptest::prelude::*;

/// Two-column design with a covariate on [−1, 1] and data drawn from the family.
fn synthetic(family: Family, link: Link, n: usize, beta: [f64; 2], phi: f64, trials: f64, seed: u64) -> ModelData {
    let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
    let mu: Vec<f64> = xs.iter().map(|v| link.inverse(beta[0] + beta[1] * v)).collect();
    let w = DVector::from_element(n, trials);
    let y = simulate_response(family, &mu, phi, &w, &mut RngStream::new(seed, 0)).unwrap();
    ModelData::new(y, x, None, Some(vec![trials; n])).unwrap()
}

fn cases() -> Vec<(Family, Link, ModelData)> {
    vec![
        (Family::Poisson, Link::Log, synthetic(Family::Poisson, Link::Log, 40, [1.5, 0.6], 1.0, 1.0, 1)),
        (Family::Binomial, Link::Logit, synthetic(Family::Binomial, Link::Logit, 30, [0.2, -0.9], 1.0, 20.0, 2)),
        (Family::Gaussian, Link::Identity, synthetic(Family::Gaussian, Link::Identity, 25, [2.0, 1.0], 0.5, 1.0, 3)),
        (Family::Gamma, Link::Log, synthetic(Family::Gamma, Link::Log, 60, [0.3, 0.4], 0.3, 1.0, 4)),
    ]
}

fn numeric_hessian(f: impl Fn(&[f64]) -> f64, at: &[f64], h: f64) -> DMatrix<f64> {
    let p = at.len();
    DMatrix::from_fn(p, p, |i, j| {
        let eval = |di: f64, dj: f64| {
            let mut b = at.to_vec();
            b[i] += di;
            b[j] += dj;
            f(&b)
        };
        (eval(h, h) - eval(h, -h) - eval(-h, h) + eval(-h, -h)) / (4.0 * h * h)
    })
}

#[test]
fn canonical_links_have_observed_equal_expected_information() {
    for (family, link, data) in cases().into_iter().filter(|(f, l, _)| f.canonical_link() == *l && *f != Family::Gamma) {
        let fit = fit_irls(family, link, &data, IrlsOptions::default()).unwrap();
        let phi = fit.inferential_phi();
        let expected = fisher_information(family, link, &fit.beta_hat, phi, &data).unwrap();
        let observed = -numeric_hessian(|b| log_likelihood(family, link, b, phi, &data).unwrap(), &fit.beta_hat, 1e-4);
        let rel = (&observed - &expected).abs().max() / expected.abs().max();
        assert!(rel < 1e-4, "{family:?}: {rel:e}\n{observed}\n{expected}");
    }
}

#[test]
fn unit_deviance_is_locally_pearson() {
    for family in [Family::Gaussian, Family::Poisson, Family::Binomial, Family::Gamma] {
        let mus: &[f64] = if family == Family::Binomial { &[0.05, 0.3, 0.5, 0.8, 0.97] } else { &[0.1, 1.0, 7.5, 60.0] };
        for &mu in mus {
            for k in 1..=9 {
                for sign in [-1.0, 1.0] {
                    // distance to the nearer edge of the mean space
                    let room = if family == Family::Binomial { mu.min(1.0 - mu) } else { mu };
                    let y = mu + sign * 0.001 * k as f64 * room;
                    let pearson = (y - mu).powi(2) / family.variance(mu);
                    let ratio = family.unit_deviance(y, mu) / pearson;
                    assert!((0.99..=1.01).contains(&ratio), "{family:?} mu = {mu}, y = {y}: {ratio}");
                }
            }
        }
    }
}

#[test]
fn deviance_scale_identity_is_exact_for_every_case() {
    for (family, link, data) in cases() {
        let fit = fit_irls(family, link, &data, IrlsOptions::default()).unwrap();
        let s = scale_estimates(family, &data, &fit).unwrap();
        let n = data.n() as f64;
        assert_eq!(s.phi_dev, s.phi_eql * n / (n - data.p() as f64), "{family:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn analytic_score_matches_central_differences(b0 in -0.5f64..1.5, b1 in -1.0f64..1.0, which in 0usize..4) {
        let (family, link, data) = cases().swap_remove(which);
        let phi = 0.7;
        let beta = [b0, b1];
        let s = score(family, link, &beta, phi, &data).unwrap();
        for j in 0..2 {
            let h = 1e-6 * (1.0 + beta[j].abs());
            let mut up = beta;
            let mut dn = beta;
            up[j] += h;
            dn[j] -= h;
            let fd = (log_likelihood(family, link, &up, phi, &data).unwrap() - log_likelihood(family, link, &dn, phi, &data).unwrap()) / (2.0 * h);
            let scale = s[j].abs().max(1.0);
            prop_assert!((s[j] - fd).abs() / scale < 1e-5, "{:?} j = {}: {} vs {}", family, j, s[j], fd);
        }
    }

    #[test]
    fn gaussian_scale_identity_on_random_data(
        ys in prop::collection::vec(-50.0f64..50.0, 4..40),
        slope in -3.0f64..3.0,
    ) {
        let n = ys.len();
        let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let y: Vec<f64> = ys.iter().enumerate().map(|(i, v)| v + slope * i as f64).collect();
        let data = ModelData::new(y, x, None, None).unwrap();
        let fit = fit_irls(Family::Gaussian, Link::Identity, &data, IrlsOptions::default()).unwrap();
        let s = scale_estimates(Family::Gaussian, &data, &fit).unwrap();
        prop_assert_eq!(s.phi_dev, s.phi_eql * n as f64 / (n - 2) as f64);
    }
}
