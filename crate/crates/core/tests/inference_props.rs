use nalgebra::DMatrix;
use pivalue::glm::{fit_irls, Family, IrlsOptions, Link, ModelData};
use pivalue::inference::{pi_value_from_samples, tail_comparison, wald_pvalue, SampleMethod, WaldDist};
use pivalue::numerics::{std_normal_cdf, RngStream};
use proptest::prelude::*;
use rand_distr::{Distribution, Normal};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wald_p_is_twice_the_smaller_raw_tail(
        ys in prop::collection::vec(-5.0f64..5.0, 6..30),
        slope in -1.0f64..1.0,
        beta0 in -0.5f64..0.5,
    ) {
        let n = ys.len();
        let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { i as f64 / n as f64 });
        let y: Vec<f64> = ys.iter().enumerate().map(|(i, v)| v + slope * i as f64).collect();
        let data = ModelData::new(y, x, None, None).unwrap();
        let fit = fit_irls(Family::Gaussian, Link::Identity, &data, IrlsOptions::default()).unwrap();
        let phi = fit.deviance / (n - 2) as f64;
        prop_assume!(phi > 0.0);
        let r = wald_pvalue(&fit, phi, 1, beta0, WaldDist::Normal, None).unwrap();
        let lower = std_normal_cdf(r.z).unwrap();
        let upper = std_normal_cdf(-r.z).unwrap();
        let expect = (2.0 * lower.min(upper)).clamp(f64::MIN_POSITIVE, 1.0);
        prop_assert!((r.p_or_pi - expect).abs() <= 4.0 * f64::EPSILON * expect.max(1e-300), "{} vs {}", r.p_or_pi, expect);
        prop_assert!(r.p_or_pi > 0.0 && r.p_or_pi <= 1.0);
    }

    #[test]
    fn t_tail_falls_with_z_and_rises_as_dof_shrinks(z in 0.05f64..6.0, dz in 0.01f64..1.0, dof in 3u64..200) {
        let a = tail_comparison(z, dof).unwrap();
        let b = tail_comparison(z + dz, dof).unwrap();
        let c = tail_comparison(z, dof + 1).unwrap();
        prop_assert!(b.p_t_jeffreys < a.p_t_jeffreys);
        prop_assert!(b.p_normal < a.p_normal);
        prop_assert!(c.p_t_jeffreys < a.p_t_jeffreys);
        prop_assert!(a.p_normal < a.p_t_jeffreys);
    }
}

#[test]
fn empirical_floor_is_two_over_n() {
    for n in [10usize, 997, 4000] {
        let mut s: Vec<f64> = (0..n).map(|k| 1.0 + k as f64).collect();
        s[0] = -1.0;
        let r = pi_value_from_samples(&s, 0.0, SampleMethod::Empirical).unwrap();
        assert_eq!(r.p_or_pi, 2.0 / n as f64);
        let all: Vec<f64> = (0..n).map(|k| 1.0 + k as f64).collect();
        assert_eq!(pi_value_from_samples(&all, 0.0, SampleMethod::Empirical).unwrap().p_or_pi, 0.0);
    }
}

#[test]
fn mixture_tail_tracks_empirical_tail() {
    let n = 20_000;
    for (id, mean) in [0.3, 1.0, 1.8, 2.4, -1.2].into_iter().enumerate() {
        let mut rng = RngStream::new(11, id as u64);
        let dist = Normal::new(mean, 1.0).unwrap();
        let s: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        let emp = pi_value_from_samples(&s, 0.0, SampleMethod::Empirical).unwrap().p_or_pi;
        assert!(emp > 50.0 / n as f64);
        let mix = pi_value_from_samples(&s, 0.0, SampleMethod::Mixture).unwrap().p_or_pi;
        let q = emp / 2.0;
        let se = 2.0 * (q * (1.0 - q) / n as f64).sqrt();
        assert!((mix - emp).abs() < 3.0 * se, "mean {mean}: mixture {mix} vs empirical {emp} (se {se})");
    }
}
