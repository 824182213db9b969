use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RngStream;

const ADAPT_EVERY: usize = 50;
const TARGET_ACCEPT: f64 = 0.3;

/// Retained draws of a random-walk Metropolis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcChain {
    /// Row-major, one row of length `p` per retained iteration.
    pub draws: Vec<f64>,
    pub p: usize,
    /// Over the retained iterations only.
    pub acceptance_rate: f64,
    pub seed: u64,
    pub stream_id: u64,
    pub burn_in: usize,
    /// Proposal multiplier after adaptation.
    pub final_scale: f64,
}

impl McmcChain {
    pub fn len(&self) -> usize {
        self.draws.len() / self.p.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draw(&self, k: usize) -> &[f64] {
        &self.draws[k * self.p..(k + 1) * self.p]
    }

    /// Draws of coordinate `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.len()).map(|k| self.draws[k * self.p + i]).collect()
    }

    pub fn mean_sd(&self, i: usize) -> (f64, f64) {
        let c = self.column(i);
        let n = c.len() as f64;
        let m = c.iter().sum::<f64>() / n;
        let v = c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v.sqrt())
    }
}

/// Gaussian random-walk Metropolis.
///
/// Proposals are `scale · L z` with `L Lᵀ = proposal_cov`, starting from
/// scale 2.38/√p. During burn-in the scale is nudged every 50 iterations
/// toward 30% acceptance; it is frozen before the first retained draw.
pub fn rw_metropolis(
    log_post: &(dyn Fn(&[f64]) -> f64 + Sync),
    init: &[f64],
    proposal_cov: &DMatrix<f64>,
    n_iter: usize,
    burn_in: usize,
    mut stream: RngStream,
) -> Result<McmcChain> {
    let p = init.len();
    if proposal_cov.nrows() != p || proposal_cov.ncols() != p {
        return Err(Error::Dimension(format!("proposal covariance is {}x{}, need {p}x{p}", proposal_cov.nrows(), proposal_cov.ncols())));
    }
    let chol = proposal_cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain("proposal covariance is not positive definite".into()))?;
    let l = chol.l();
    let mut current = init.to_vec();
    let mut lp = log_post(&current);
    if !lp.is_finite() {
        return Err(Error::Domain("log posterior not finite at the initial point".into()));
    }
    let mut scale = 2.38 / (p as f64).sqrt();
    let mut window_accepts = 0usize;
    let mut accepts = 0usize;
    let mut draws = Vec::with_capacity(n_iter * p);
    let mut proposal = vec![0.0; p];
    for it in 0..burn_in + n_iter {
        let z = DVector::from_iterator(p, (0..p).map(|_| stream.sample::<f64, _>(StandardNormal)));
        let step = &l * z;
        for j in 0..p {
            proposal[j] = current[j] + scale * step[j];
        }
        let lp_new = log_post(&proposal);
        let u: f64 = stream.random();
        let accept = lp_new.is_finite() && (lp_new - lp >= 0.0 || u.ln() < lp_new - lp);
        if accept {
            current.copy_from_slice(&proposal);
            lp = lp_new;
        }
        if it < burn_in {
            window_accepts += accept as usize;
            if (it + 1) % ADAPT_EVERY == 0 {
                let rate = window_accepts as f64 / ADAPT_EVERY as f64;
                // multiplicative Robbins–Monro style nudge on the log scale
                scale *= ((rate - TARGET_ACCEPT) * 2.0).exp();
                window_accepts = 0;
            }
        } else {
            accepts += accept as usize;
            draws.extend_from_slice(&current);
        }
    }
    if n_iter > 0 && accepts == 0 {
        return Err(Error::Mixing(format!("no proposal accepted in {n_iter} iterations after adaptation (scale {scale:.3e})")));
    }
    Ok(McmcChain {
        draws,
        p,
        acceptance_rate: accepts as f64 / n_iter.max(1) as f64,
        seed: stream.seed(),
        stream_id: stream.stream_id(),
        burn_in,
        final_scale: scale,
    })
}

/// Independent chains on streams `first_stream..first_stream + n_chains`,
/// run in parallel.
pub fn run_chains(
    log_post: &(dyn Fn(&[f64]) -> f64 + Sync),
    init: &[f64],
    proposal_cov: &DMatrix<f64>,
    n_iter: usize,
    burn_in: usize,
    seed: u64,
    first_stream: u64,
    n_chains: usize,
) -> Result<Vec<McmcChain>> {
    (0..n_chains as u64)
        .into_par_iter()
        .map(|c| rw_metropolis(log_post, init, proposal_cov, n_iter, burn_in, RngStream::new(seed, first_stream + c)))
        .collect()
}

/// Concatenate the draws of coordinate `i` across chains.
pub fn pooled_column(chains: &[McmcChain], i: usize) -> Vec<f64> {
    chains.iter().flat_map(|c| c.column(i)).collect()
}
