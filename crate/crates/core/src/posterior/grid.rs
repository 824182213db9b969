use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::priors::{prior_logpdf, Interval, PriorSpec};

/// Log-likelihood as a function of the coefficient vector.
pub type LogLik<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Which tails `detect_impropriety` inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub at: f64,
    /// log f(at) − log f(peak).
    pub log_ratio: f64,
    /// |d log f / dβ| at `at`.
    pub slope: f64,
    pub flat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImproprietyReport {
    pub improper: bool,
    pub left: Option<TailCheck>,
    pub right: Option<TailCheck>,
    pub evidence: String,
}

const PROBE_RANGE: f64 = 40.0;
const PROBE_TAIL: f64 = 30.0;
const PEAK_RATIO: f64 = 1e-10;
const SLOPE_LIMIT: f64 = 0.05;

/// Flags a log density whose tail neither falls below 1e-10 of its peak
/// by |β| = 30 nor decays there at 0.05 log units per unit or faster.
pub fn detect_impropriety(marginal_loglik: &dyn Fn(f64) -> f64, direction: Direction) -> ImproprietyReport {
    let n = 801;
    let peak = (0..n)
        .map(|k| marginal_loglik(-PROBE_RANGE + 2.0 * PROBE_RANGE * k as f64 / (n - 1) as f64))
        .filter(|v| !v.is_nan())
        .fold(f64::NEG_INFINITY, f64::max);
    let check = |at: f64| -> TailCheck {
        let v = marginal_loglik(at);
        let log_ratio = v - peak;
        let h = 0.5;
        let slope = if v.is_finite() {
            ((marginal_loglik(at + h) - marginal_loglik(at - h)) / (2.0 * h)).abs()
        } else {
            f64::INFINITY
        };
        let flat = log_ratio > PEAK_RATIO.ln() && slope < SLOPE_LIMIT;
        TailCheck { at, log_ratio, slope, flat }
    };
    let left = matches!(direction, Direction::Left | Direction::Both).then(|| check(-PROBE_TAIL));
    let right = matches!(direction, Direction::Right | Direction::Both).then(|| check(PROBE_TAIL));
    let improper = left.is_some_and(|t| t.flat) || right.is_some_and(|t| t.flat);
    let describe = |t: &TailCheck| {
        format!("at {}: log ratio to peak {:.3}, slope {:.3e}{}", t.at, t.log_ratio, t.slope, if t.flat { " (flat)" } else { "" })
    };
    let evidence = [left.as_ref(), right.as_ref()].into_iter().flatten().map(describe).collect::<Vec<_>>().join("; ");
    ImproprietyReport { improper, left, right, evidence }
}

/// Posterior tabulated on a tensor grid of up to three coefficients.
///
/// `log_density` is stored with the first axis outermost. When `proper`
/// is false the values are left unnormalized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridPosterior {
    pub axes: Vec<Vec<f64>>,
    pub log_density: Vec<f64>,
    pub log_normalizer: f64,
    pub proper: bool,
    /// One report per axis.
    pub impropriety: Vec<ImproprietyReport>,
}

fn linspace(b: Interval, n: usize) -> Vec<f64> {
    (0..n).map(|k| b.lo + b.len() * k as f64 / (n - 1) as f64).collect()
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    (0..n)
        .map(|k| {
            let left = if k > 0 { axis[k] - axis[k - 1] } else { 0.0 };
            let right = if k + 1 < n { axis[k + 1] - axis[k] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Unravel a flat index into per-axis indices, first axis outermost.
fn unravel(mut flat: usize, sizes: &[usize], out: &mut [usize]) {
    for d in (0..sizes.len()).rev() {
        out[d] = flat % sizes[d];
        flat /= sizes[d];
    }
}

/// Tabulate likelihood × independent priors on a grid and normalize by
/// the trapezoid rule.
///
/// Each axis is also probed for impropriety over [−40, 40], with the
/// other axes integrated on their grids; a positive probe withholds the
/// normalization.
pub fn grid_posterior(loglik: LogLik, priors: &[PriorSpec], bounds: &[Interval], resolution: usize) -> Result<GridPosterior> {
    let p = bounds.len();
    if p == 0 || p > 3 {
        return Err(Error::Dimension(format!("grid posterior supports 1 to 3 coefficients, got {p}")));
    }
    if priors.len() != p {
        return Err(Error::Dimension(format!("{} priors for {p} coefficients", priors.len())));
    }
    if resolution < 3 {
        return Err(Error::Config(format!("grid resolution {resolution} < 3")));
    }
    for (b, pr) in bounds.iter().zip(priors) {
        if !(b.lo < b.hi) || !b.lo.is_finite() || !b.hi.is_finite() {
            return Err(Error::Config(format!("grid bounds [{}, {}] invalid", b.lo, b.hi)));
        }
        pr.validate()?;
    }
    let axes: Vec<Vec<f64>> = bounds.iter().map(|b| linspace(*b, resolution)).collect();
    let weights: Vec<Vec<f64>> = axes.iter().map(|a| trapezoid_weights(a)).collect();
    let log_prior: Vec<Vec<f64>> =
        axes.iter().zip(priors).map(|(a, pr)| a.iter().map(|&b| prior_logpdf(pr, b)).collect()).collect();
    let sizes = vec![resolution; p];
    let total = resolution.pow(p as u32);

    let log_unnorm: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut idx = [0usize; 3];
            unravel(flat, &sizes, &mut idx[..p]);
            let beta: Vec<f64> = (0..p).map(|d| axes[d][idx[d]]).collect();
            let lp: f64 = (0..p).map(|d| log_prior[d][idx[d]]).sum();
            if lp == f64::NEG_INFINITY {
                return lp;
            }
            let v = lp + loglik(&beta);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        })
        .collect();
    if log_unnorm.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::Support("posterior is zero on the whole grid".into()));
    }
    let log_w = |flat: usize| -> f64 {
        let mut idx = [0usize; 3];
        unravel(flat, &sizes, &mut idx[..p]);
        (0..p).map(|d| weights[d][idx[d]].ln()).sum()
    };
    let log_normalizer = log_sum_exp((0..total).map(|f| log_unnorm[f] + log_w(f)));

    let impropriety: Vec<ImproprietyReport> = (0..p)
        .map(|axis| {
            let marginal = |b: f64| -> f64 {
                let lp_axis = prior_logpdf(&priors[axis], b);
                if lp_axis == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                let others: Vec<usize> = (0..p).filter(|&d| d != axis).collect();
                let osizes: Vec<usize> = others.iter().map(|_| resolution).collect();
                let count = resolution.pow(others.len() as u32);
                let terms = (0..count).into_par_iter().map(|flat| {
                    let mut oidx = [0usize; 3];
                    unravel(flat, &osizes, &mut oidx[..others.len()]);
                    let mut beta = vec![0.0; p];
                    beta[axis] = b;
                    let mut acc = lp_axis;
                    for (k, &d) in others.iter().enumerate() {
                        beta[d] = axes[d][oidx[k]];
                        acc += log_prior[d][oidx[k]] + weights[d][oidx[k]].ln();
                    }
                    if acc == f64::NEG_INFINITY {
                        return acc;
                    }
                    let v = acc + loglik(&beta);
                    if v.is_nan() {
                        f64::NEG_INFINITY
                    } else {
                        v
                    }
                });
                log_sum_exp(terms.collect::<Vec<_>>().into_iter())
            };
            detect_impropriety(&marginal, Direction::Both)
        })
        .collect();
    let proper = impropriety.iter().all(|r| !r.improper);
    let log_density = if proper { log_unnorm.iter().map(|v| v - log_normalizer).collect() } else { log_unnorm };
    Ok(GridPosterior { axes, log_density, log_normalizer, proper, impropriety })
}

/// Marginal summary of one coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalSummary {
    pub mean: f64,
    pub sd: f64,
}

impl GridPosterior {
    fn sizes(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len()).collect()
    }

    fn require_proper(&self) -> Result<()> {
        if self.proper {
            Ok(())
        } else {
            Err(Error::NotApplicable(format!("posterior is improper: {}", self.evidence())))
        }
    }

    fn evidence(&self) -> String {
        self.impropriety.iter().filter(|r| r.improper).map(|r| r.evidence.as_str()).collect::<Vec<_>>().join(" | ")
    }

    /// Density of coefficient `i` on its axis, other axes integrated out.
    pub fn marginal(&self, i: usize) -> Result<Vec<f64>> {
        self.require_proper()?;
        if i >= self.axes.len() {
            return Err(Error::Dimension(format!("axis {i} out of range")));
        }
        let sizes = self.sizes();
        let weights: Vec<Vec<f64>> = self.axes.iter().map(|a| trapezoid_weights(a)).collect();
        let mut out = vec![0.0; sizes[i]];
        let mut idx = vec![0usize; sizes.len()];
        for (flat, ld) in self.log_density.iter().enumerate() {
            unravel(flat, &sizes, &mut idx);
            let w: f64 = (0..sizes.len()).filter(|&d| d != i).map(|d| weights[d][idx[d]]).product();
            out[idx[i]] += w * ld.exp();
        }
        Ok(out)
    }

    pub fn summary(&self, i: usize) -> Result<MarginalSummary> {
        let m = self.marginal(i)?;
        let w = trapezoid_weights(&self.axes[i]);
        let ax = &self.axes[i];
        let mass: f64 = (0..m.len()).map(|k| w[k] * m[k]).sum();
        let mean = (0..m.len()).map(|k| w[k] * m[k] * ax[k]).sum::<f64>() / mass;
        let var = (0..m.len()).map(|k| w[k] * m[k] * (ax[k] - mean).powi(2)).sum::<f64>() / mass;
        Ok(MarginalSummary { mean, sd: var.sqrt() })
    }

    /// Posterior P(β_i < beta0) by the trapezoid rule on the marginal.
    pub fn lower_tail(&self, i: usize, beta0: f64) -> Result<f64> {
        let m = self.marginal(i)?;
        let ax = &self.axes[i];
        let total: f64 = (1..m.len()).map(|k| 0.5 * (m[k] + m[k - 1]) * (ax[k] - ax[k - 1])).sum();
        if beta0 <= ax[0] {
            return Ok(0.0);
        }
        if beta0 >= ax[ax.len() - 1] {
            return Ok(1.0);
        }
        let mut acc = 0.0;
        for k in 1..m.len() {
            if beta0 >= ax[k] {
                acc += 0.5 * (m[k] + m[k - 1]) * (ax[k] - ax[k - 1]);
            } else {
                let t = (beta0 - ax[k - 1]) / (ax[k] - ax[k - 1]);
                let at = m[k - 1] + t * (m[k] - m[k - 1]);
                acc += 0.5 * (m[k - 1] + at) * (beta0 - ax[k - 1]);
                break;
            }
        }
        Ok((acc / total).clamp(0.0, 1.0))
    }

    /// Twice the smaller posterior tail of β_i about `beta0`.
    pub fn pi_value(&self, i: usize, beta0: f64) -> Result<f64> {
        let lo = self.lower_tail(i, beta0)?;
        Ok((2.0 * lo.min(1.0 - lo)).min(1.0))
    }

    /// One draw from the tabulated joint: a grid cell chosen by mass, then
    /// a uniform jitter within half a spacing on every axis.
    pub fn sample(&self, rng: &mut RngStream) -> Result<Vec<f64>> {
        self.require_proper()?;
        let sizes = self.sizes();
        let weights: Vec<Vec<f64>> = self.axes.iter().map(|a| trapezoid_weights(a)).collect();
        let mut idx = vec![0usize; sizes.len()];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.log_density.len() - 1;
        for (flat, ld) in self.log_density.iter().enumerate() {
            unravel(flat, &sizes, &mut idx);
            let w: f64 = (0..sizes.len()).map(|d| weights[d][idx[d]]).product();
            acc += w * ld.exp();
            if acc >= u {
                chosen = flat;
                break;
            }
        }
        unravel(chosen, &sizes, &mut idx);
        Ok((0..sizes.len())
            .map(|d| {
                let ax = &self.axes[d];
                let h = ax[1] - ax[0];
                (ax[idx[d]] + h * (rng.random::<f64>() - 0.5)).clamp(ax[0], ax[ax.len() - 1])
            })
            .collect())
    }

    /// Trapezoid integral of the stored density; 1 when proper.
    pub fn mass(&self) -> f64 {
        let sizes = self.sizes();
        let weights: Vec<Vec<f64>> = self.axes.iter().map(|a| trapezoid_weights(a)).collect();
        let mut idx = vec![0usize; sizes.len()];
        self.log_density
            .iter()
            .enumerate()
            .map(|(flat, ld)| {
                unravel(flat, &sizes, &mut idx);
                (0..sizes.len()).map(|d| weights[d][idx[d]]).product::<f64>() * ld.exp()
            })
            .sum()
    }
}
