use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{fisher_information, log_likelihood, FitResult, ModelData};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Likelihood p-formula on a two-coefficient grid, first axis outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PFormulaGrid {
    pub axes: [Vec<f64>; 2],
    /// (2π)^{−p/2}·|I(β̂)|^{1/2}·exp(ll(β) − ll(β̂)).
    pub raw: Vec<f64>,
    /// `raw` divided by its trapezoid integral.
    pub renormalized: Vec<f64>,
}

/// Evaluate the p-formula and its renormalized (p*) version on a grid.
pub fn p_formula_density(fit: &FitResult, data: &ModelData, axes: [&[f64]; 2], phi: f64) -> Result<PFormulaGrid> {
    if fit.boundary || !fit.converged {
        return Err(Error::NotApplicable("p-formula needs a converged interior fit".into()));
    }
    if fit.p != 2 {
        return Err(Error::Dimension(format!("p-formula grid needs p = 2, got {}", fit.p)));
    }
    let info = fisher_information(fit.family, fit.link, &fit.beta_hat, phi, data)?;
    let log_det = info.clone().cholesky().ok_or_else(|| Error::Domain("information not positive definite".into()))?;
    let log_det: f64 = 2.0 * log_det.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let ll_hat = log_likelihood(fit.family, fit.link, &fit.beta_hat, phi, data)?;
    let log_c = -LN_2PI + 0.5 * log_det;
    let mut raw = Vec::with_capacity(axes[0].len() * axes[1].len());
    for &b0 in axes[0] {
        for &b1 in axes[1] {
            let ll = log_likelihood(fit.family, fit.link, &[b0, b1], phi, data).unwrap_or(f64::NEG_INFINITY);
            raw.push((log_c + ll - ll_hat).exp());
        }
    }
    let mass = trapezoid_2d(axes, &raw);
    let renormalized = raw.iter().map(|v| v / mass).collect();
    Ok(PFormulaGrid { axes: [axes[0].to_vec(), axes[1].to_vec()], raw, renormalized })
}

/// Trapezoid integral of a row-major grid.
pub fn trapezoid_2d(axes: [&[f64]; 2], values: &[f64]) -> f64 {
    let w = |a: &[f64], k: usize| {
        let left = if k > 0 { a[k] - a[k - 1] } else { 0.0 };
        let right = if k + 1 < a.len() { a[k + 1] - a[k] } else { 0.0 };
        0.5 * (left + right)
    };
    let m = axes[1].len();
    values.iter().enumerate().map(|(f, v)| w(axes[0], f / m) * w(axes[1], f % m) * v).sum()
}
