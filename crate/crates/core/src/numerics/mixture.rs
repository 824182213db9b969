//! Univariate Gaussian mixtures by EM with BIC order selection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng::RngStream;
use super::special::phi;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel1D {
    pub components: Vec<Component>,
    pub loglik: f64,
    pub bic: f64,
}

impl MixtureModel1D {
    pub fn count(&self) -> usize {
        self.components.len()
    }

    /// Σ w_k·2Φ(−|m_k|/s_k), the folded two-sided tail about zero.
    pub fn two_sided_tail_at_zero(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * 2.0 * phi(-c.mean.abs() / c.sd))
            .sum::<f64>()
            .min(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct MixtureOptions {
    pub g_max: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub restarts: usize,
    /// EM iterations given to every restart before the best two are refined.
    pub screening_iter: usize,
    pub seed: u64,
}

impl Default for MixtureOptions {
    fn default() -> Self {
        Self { g_max: 5, max_iter: 500, rel_tol: 1e-8, restarts: 10, screening_iter: 25, seed: 0x6d69_7874 }
    }
}

/// One EM run from a given starting point.
#[derive(Debug, Clone)]
pub struct EmRun {
    pub components: Vec<Component>,
    pub loglik: f64,
    pub iterations: usize,
    /// Log-likelihood after every iteration.
    pub trace: Vec<f64>,
}

/// BIC-optimal mixture over G = 1..g_max with default options.
pub fn fit_gaussian_mixture_1d(samples: &[f64], g_max: usize) -> Result<MixtureModel1D> {
    fit_gaussian_mixture_1d_with(samples, &MixtureOptions { g_max, ..Default::default() })
}

pub fn fit_gaussian_mixture_1d_with(samples: &[f64], opts: &MixtureOptions) -> Result<MixtureModel1D> {
    if samples.len() < 50 {
        return Err(Error::Domain(format!("mixture fit needs at least 50 samples, got {}", samples.len())));
    }
    if opts.g_max < 1 {
        return Err(Error::Domain("g_max must be at least 1".into()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("mixture fit: non-finite sample".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::Degeneracy("all samples identical".into()));
    }
    let sd = var.sqrt();
    let floor = 1e-6 * sd;

    let single = Component { weight: 1.0, mean, sd };
    let ll1 = loglik(samples, &[single]);
    let mut best = MixtureModel1D { components: vec![single], loglik: ll1, bic: bic(ll1, 1, n) };

    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut rng = RngStream::new(opts.seed, 0);

    for g in 2..=opts.g_max {
        let mut starts = Vec::with_capacity(opts.restarts.max(1));
        starts.push(
            (0..g)
                .map(|k| Component {
                    weight: 1.0 / g as f64,
                    mean: quantile(&sorted, (k as f64 + 0.5) / g as f64),
                    sd,
                })
                .collect::<Vec<_>>(),
        );
        for _ in 1..opts.restarts {
            starts.push(
                (0..g)
                    .map(|_| Component {
                        weight: 1.0 / g as f64,
                        mean: samples[rng.random_range(0..samples.len())],
                        sd,
                    })
                    .collect(),
            );
        }
        let mut screened: Vec<EmRun> = starts
            .into_iter()
            .map(|s| em(samples, s, opts.screening_iter, opts.rel_tol, floor))
            .collect();
        screened.sort_by(|a, b| b.loglik.total_cmp(&a.loglik));
        for run in screened.into_iter().take(2) {
            let done = em(samples, run.components, opts.max_iter, opts.rel_tol, floor);
            let b = bic(done.loglik, g, n);
            if b < best.bic {
                best = MixtureModel1D { components: done.components, loglik: done.loglik, bic: b };
            }
        }
    }
    best.components.sort_by(|a, b| a.mean.total_cmp(&b.mean));
    Ok(best)
}

fn bic(ll: f64, g: usize, n: f64) -> f64 {
    -2.0 * ll + (3 * g - 1) as f64 * n.ln()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn loglik(xs: &[f64], comps: &[Component]) -> f64 {
    let mut logw = Vec::with_capacity(comps.len());
    for c in comps {
        logw.push((c.weight, c.mean, 1.0 / c.sd, c.weight.ln() - c.sd.ln() - LN_SQRT_2PI));
    }
    xs.iter()
        .map(|&x| {
            let mut m = f64::NEG_INFINITY;
            let mut buf = [0.0f64; 16];
            for (k, &(_, mu, inv, c0)) in logw.iter().enumerate() {
                let z = (x - mu) * inv;
                buf[k] = c0 - 0.5 * z * z;
                m = m.max(buf[k]);
            }
            m + buf[..logw.len()].iter().map(|v| (v - m).exp()).sum::<f64>().ln()
        })
        .sum()
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Run EM from `init` for at most `max_iter` iterations.
///
/// Stops once the relative log-likelihood change drops below `rel_tol`.
/// Component sds are floored at `sd_floor`.
pub fn em(xs: &[f64], init: Vec<Component>, max_iter: usize, rel_tol: f64, sd_floor: f64) -> EmRun {
    let g = init.len();
    assert!((1..=16).contains(&g), "component count out of range");
    let n = xs.len() as f64;
    let mut comps = init;
    let mut trace = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut resp = [0.0f64; 16];
    for _ in 0..max_iter {
        // E-step accumulates sufficient statistics directly; the log-likelihood
        // it reports belongs to the parameters going in.
        let mut s0 = [0.0f64; 16];
        let mut s1 = [0.0f64; 16];
        let mut s2 = [0.0f64; 16];
        let consts: Vec<(f64, f64, f64)> = comps
            .iter()
            .map(|c| (c.mean, 1.0 / c.sd, c.weight.ln() - c.sd.ln() - LN_SQRT_2PI))
            .collect();
        let mut ll = 0.0;
        for &x in xs {
            let mut m = f64::NEG_INFINITY;
            for (k, &(mu, inv, c0)) in consts.iter().enumerate() {
                let z = (x - mu) * inv;
                resp[k] = c0 - 0.5 * z * z;
                m = m.max(resp[k]);
            }
            let mut tot = 0.0;
            for r in resp[..g].iter_mut() {
                *r = (*r - m).exp();
                tot += *r;
            }
            ll += m + tot.ln();
            let inv_tot = 1.0 / tot;
            for k in 0..g {
                let r = resp[k] * inv_tot;
                s0[k] += r;
                s1[k] += r * x;
                s2[k] += r * x * x;
            }
        }
        if iterations > 0 {
            trace.push(ll);
            if ((ll - prev) / ll.abs().max(1e-300)).abs() < rel_tol {
                break;
            }
        }
        prev = ll;
        for k in 0..g {
            let w = s0[k].max(1e-300);
            let mean = s1[k] / w;
            let var = (s2[k] / w - mean * mean).max(0.0);
            comps[k] = Component { weight: (s0[k] / n).max(1e-300), mean, sd: var.sqrt().max(sd_floor) };
        }
        iterations += 1;
    }
    let wsum: f64 = comps.iter().map(|c| c.weight).sum();
    for c in comps.iter_mut() {
        c.weight /= wsum;
    }
    let loglik = loglik(xs, &comps);
    trace.push(loglik);
    EmRun { components: comps, loglik, iterations, trace }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn draws(n: usize, seed: u64, f: impl Fn(&mut RngStream) -> f64) -> Vec<f64> {
        let mut r = RngStream::new(seed, 0);
        (0..n).map(|_| f(&mut r)).collect()
    }

    #[test]
    fn single_component_recovery() {
        let nd = Normal::new(2.0, 1.0).unwrap();
        let xs = draws(100_000, 1, |r| nd.sample(r));
        let m = fit_gaussian_mixture_1d(&xs, 5).unwrap();
        assert_eq!(m.count(), 1);
        assert!((m.components[0].mean - 2.0).abs() < 0.02);
        assert!((m.components[0].sd - 1.0).abs() < 0.02);
    }

    #[test]
    fn two_component_recovery() {
        let a = Normal::new(-2.0, 1.0).unwrap();
        let b = Normal::new(2.0, 1.0).unwrap();
        let xs = draws(100_000, 2, |r| if r.random::<bool>() { a.sample(r) } else { b.sample(r) });
        let m = fit_gaussian_mixture_1d(&xs, 5).unwrap();
        assert_eq!(m.count(), 2);
        for c in &m.components {
            assert!((c.weight - 0.5).abs() < 0.02);
        }
        let wsum: f64 = m.components.iter().map(|c| c.weight).sum();
        assert!((wsum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn em_is_monotone() {
        let a = Normal::new(-1.0, 0.5).unwrap();
        let b = Normal::new(1.5, 1.5).unwrap();
        let xs = draws(5_000, 3, |r| if r.random::<f64>() < 0.3 { a.sample(r) } else { b.sample(r) });
        let init = vec![
            Component { weight: 1.0 / 3.0, mean: -2.0, sd: 2.0 },
            Component { weight: 1.0 / 3.0, mean: 0.0, sd: 2.0 },
            Component { weight: 1.0 / 3.0, mean: 2.0, sd: 2.0 },
        ];
        let run = em(&xs, init, 500, 0.0, 1e-6);
        for w in run.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn degenerate_input() {
        assert!(matches!(fit_gaussian_mixture_1d(&[1.0; 100], 3), Err(Error::Degeneracy(_))));
        assert!(fit_gaussian_mixture_1d(&[1.0, 2.0], 3).is_err());
    }
}
