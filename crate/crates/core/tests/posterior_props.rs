use nalgebra::DMatrix;
use pivalue::glm::{fit_irls, log_likelihood, Family, IrlsOptions, Link, ModelData};
use pivalue::io::{bundled_sglt2i, fit_trial};
use pivalue::numerics::{normal_logpdf, student_t_logpdf, RngStream};
use pivalue::posterior::{grid_posterior, laplace_posterior, run_chains, PosteriorKind};
use pivalue::priors::{Interval, PriorSpec, ScalePriorSpec};
use rand_distr::{Distribution, Normal};

#[test]
fn grid_pi_is_stable_under_refinement() {
    for (study, outcome) in [("CREDENCE", "primary"), ("DAPA-CKD", "primary")] {
        let (d, f, _) = fit_trial(&bundled_sglt2i(), study, outcome, 1000.0).unwrap();
        let ll = |b: &[f64]| log_likelihood(f.family, f.link, b, 1.0, &d.data).unwrap_or(f64::NEG_INFINITY);
        let priors = [PriorSpec::normal(0.0, 50.0), PriorSpec::normal(0.0, 50.0)];
        let bounds: Vec<Interval> = (0..2).map(|i| Interval::new(f.beta_hat[i] - 8.0 * f.se(i, 1.0), f.beta_hat[i] + 8.0 * f.se(i, 1.0))).collect();
        let coarse = grid_posterior(&ll, &priors, &bounds, 201).unwrap();
        let fine = grid_posterior(&ll, &priors, &bounds, 401).unwrap();
        assert!(coarse.proper && fine.proper);
        let (a, b) = (coarse.pi_value(1, 0.0).unwrap(), fine.pi_value(1, 0.0).unwrap());
        assert!((a - b).abs() < 1e-4, "{study}/{outcome}: {a} vs {b}");
        assert!((fine.mass() - 1.0).abs() < 1e-6);
    }
}

fn gaussian_fit(n: usize, seed: u64) -> pivalue::glm::FitResult {
    let mut rng = RngStream::new(seed, 0);
    let noise = Normal::new(0.0, 1.5).unwrap();
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { i as f64 / n as f64 });
    let y: Vec<f64> = (0..n).map(|i| 1.0 + 2.0 * x[(i, 1)] + noise.sample(&mut rng)).collect();
    let data = ModelData::new(y, x, None, None).unwrap();
    fit_irls(Family::Gaussian, Link::Identity, &data, IrlsOptions::default()).unwrap()
}

#[test]
fn scale_marginal_modes() {
    let f = gaussian_fit(25, 3);
    let resid = (f.n - f.p) as f64;
    let j = laplace_posterior(&f, &ScalePriorSpec::Jeffreys).unwrap().scale_marginal.unwrap();
    assert_eq!(j.dof, f.n - f.p);
    assert_eq!(j.mode, j.dof as f64 * j.scale / (j.dof as f64 + 2.0));
    let u = laplace_posterior(&f, &ScalePriorSpec::UniformBounded { bounds: Interval::new(1e-6, 1e6) }).unwrap();
    let m = u.scale_marginal.unwrap();
    assert_eq!(m.dof, f.n - f.p - 2);
    assert!((m.mode - f.deviance / resid).abs() < 1e-12 * m.mode);
}

/// Total variation between the t marginal and the plug-in normal of the slope.
fn tv_distance(n: usize) -> f64 {
    let f = gaussian_fit(n, 100 + n as u64);
    let r = laplace_posterior(&f, &ScalePriorSpec::Jeffreys).unwrap();
    let (loc, s_t, _) = r.beta_posterior.marginal(1);
    let dof = match r.beta_posterior.kind {
        PosteriorKind::Mvt { dof } => dof as f64,
        PosteriorKind::NormalKnownPhi => unreachable!(),
    };
    let (_, s_n, _) = r.plug_in.marginal(1);
    let (lo, hi, k) = (loc - 40.0 * s_n, loc + 40.0 * s_n, 20_001);
    let h = (hi - lo) / (k - 1) as f64;
    (0..k)
        .map(|i| {
            let b = lo + i as f64 * h;
            let t = (student_t_logpdf((b - loc) / s_t, dof) - s_t.ln()).exp();
            let g = normal_logpdf(b, loc, s_n).exp();
            (t - g).abs()
        })
        .sum::<f64>()
        * h
        / 2.0
}

#[test]
fn empirical_bayes_gap_closes_with_n() {
    let tv: Vec<f64> = [10, 30, 100, 300, 1000].iter().map(|&n| tv_distance(n)).collect();
    for w in tv.windows(2) {
        assert!(w[1] < w[0], "{tv:?}");
    }
    assert!(tv[4] < 0.01, "{tv:?}");
}

#[test]
fn metropolis_replays_and_recovers_moments() {
    let mean = [1.0, -2.0];
    let (s0, s1, rho) = (0.5, 2.0, 0.6);
    let cov = DMatrix::from_row_slice(2, 2, &[s0 * s0, rho * s0 * s1, rho * s0 * s1, s1 * s1]);
    let prec = cov.clone().try_inverse().unwrap();
    let target = move |b: &[f64]| {
        let d = [b[0] - mean[0], b[1] - mean[1]];
        -0.5 * (d[0] * (prec[(0, 0)] * d[0] + prec[(0, 1)] * d[1]) + d[1] * (prec[(1, 0)] * d[0] + prec[(1, 1)] * d[1]))
    };
    let a = run_chains(&target, &[0.0, 0.0], &cov, 20_000, 2000, 9, 0, 4).unwrap();
    let b = run_chains(&target, &[0.0, 0.0], &cov, 20_000, 2000, 9, 0, 4).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.draws, y.draws);
        assert!(x.acceptance_rate > 0.0 && x.acceptance_rate < 1.0);
        assert_eq!(x.len(), 20_000);
    }
    // batch means: each chain split into 20 batches
    for i in 0..2 {
        let batches: Vec<f64> = a
            .iter()
            .flat_map(|c| {
                let col = c.column(i);
                col.chunks(1000).map(|ch| ch.iter().sum::<f64>() / ch.len() as f64).collect::<Vec<_>>()
            })
            .collect();
        let k = batches.len() as f64;
        let m = batches.iter().sum::<f64>() / k;
        let se = (batches.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt();
        assert!((m - mean[i]).abs() < 3.0 * se, "coordinate {i}: {m} vs {} (se {se})", mean[i]);
        let all: Vec<f64> = a.iter().flat_map(|c| c.column(i)).collect();
        let var = all.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (all.len() - 1) as f64;
        let want = cov[(i, i)];
        assert!((var / want - 1.0).abs() < 0.1, "coordinate {i}: var {var} vs {want}");
    }
}
