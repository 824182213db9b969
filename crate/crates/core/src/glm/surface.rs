use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fit::{fisher_information, log_likelihood, score, spd_inverse, FitResult};
use super::{Family, ModelData};
use crate::error::{Error, Result};

/// Saddlepoint log density −½·log(2πφV(y)) − d(y, μ)/(2φ).
pub fn saddlepoint_logpdf(family: Family, y: f64, mu: f64, phi: f64) -> Result<f64> {
    let v = family.variance(y);
    if !(v > 0.0) || !family.mean_in_domain(y) {
        return Err(Error::Support(format!("V({y}) = 0 for the {} family", family.name())));
    }
    if !family.mean_in_domain(mu) || !(phi > 0.0) {
        return Err(Error::Domain(format!("mu = {mu}, phi = {phi}")));
    }
    Ok(-0.5 * (2.0 * PI * phi * v).ln() - family.unit_deviance(y, mu) / (2.0 * phi))
}

/// Rectangular grid specification for a two-parameter surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceGrid {
    /// Half-widths in standard-error units, per axis.
    pub half_widths: [f64; 2],
    pub resolution: usize,
    /// Centre used instead of β̂; required for boundary fits.
    pub anchor: Option<[f64; 2]>,
}

impl Default for SurfaceGrid {
    fn default() -> Self {
        Self { half_widths: [4.0, 4.0], resolution: 81, anchor: None }
    }
}

/// Log-likelihood and its quadratic approximation on a grid.
///
/// Node `(i, j)` sits at `(beta0[i], beta1[j])` and is stored at `i·m + j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LikelihoodSurface {
    pub beta0: Vec<f64>,
    pub beta1: Vec<f64>,
    pub loglik: Vec<f64>,
    pub loglik_quad: Vec<f64>,
    pub center: [f64; 2],
    /// Information matrix (inverse covariance) of the quadratic approximation.
    pub information: [[f64; 2]; 2],
    pub boundary: bool,
}

/// Evaluate ll on a grid around β̂ (or an anchor) with its quadratic expansion.
///
/// Around β̂ the expansion is ll(β̂) − ½ΔᵀIΔ. Around an anchor the score
/// term is kept because the anchor is not a stationary point.
pub fn likelihood_surface(fit: &FitResult, data: &ModelData, grid: &SurfaceGrid) -> Result<LikelihoodSurface> {
    if fit.p != 2 {
        return Err(Error::Dimension(format!("surface needs p = 2, got {}", fit.p)));
    }
    if grid.resolution < 2 {
        return Err(Error::Domain("surface resolution must be at least 2".into()));
    }
    let phi = fit.inferential_phi();
    let (center, with_score) = match (grid.anchor, fit.boundary) {
        (Some(a), _) => (a, true),
        (None, false) => ([fit.beta_hat[0], fit.beta_hat[1]], false),
        (None, true) => return Err(Error::NotApplicable("boundary fit: supply an anchor point".into())),
    };
    let info = fisher_information(fit.family, fit.link, &center, phi, data)?;
    let cov = spd_inverse(&info)?;
    let s = if with_score { score(fit.family, fit.link, &center, phi, data)? } else { vec![0.0, 0.0] };
    let ll0 = log_likelihood(fit.family, fit.link, &center, phi, data)?;

    let m = grid.resolution;
    let axis = |k: usize| -> Vec<f64> {
        let h = grid.half_widths[k] * cov[(k, k)].sqrt();
        (0..m).map(|i| center[k] - h + 2.0 * h * i as f64 / (m - 1) as f64).collect()
    };
    let beta0 = axis(0);
    let beta1 = axis(1);
    let mut loglik = Vec::with_capacity(m * m);
    let mut loglik_quad = Vec::with_capacity(m * m);
    for &b0 in &beta0 {
        for &b1 in &beta1 {
            let d = [b0 - center[0], b1 - center[1]];
            let quad = ll0 + s[0] * d[0] + s[1] * d[1]
                - 0.5 * (info[(0, 0)] * d[0] * d[0] + 2.0 * info[(0, 1)] * d[0] * d[1] + info[(1, 1)] * d[1] * d[1]);
            loglik.push(log_likelihood(fit.family, fit.link, &[b0, b1], phi, data).unwrap_or(f64::NEG_INFINITY));
            loglik_quad.push(quad);
        }
    }
    Ok(LikelihoodSurface {
        beta0,
        beta1,
        loglik,
        loglik_quad,
        center,
        information: [[info[(0, 0)], info[(0, 1)]], [info[(1, 0)], info[(1, 1)]]],
        boundary: fit.boundary,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadraticityReport {
    pub score: f64,
    pub pass: bool,
    pub threshold: f64,
}

/// Largest |ll − ll_quad| over nodes within Mahalanobis distance 2.
pub fn quadraticity_diagnostic(surface: &LikelihoodSurface, threshold: f64) -> Result<QuadraticityReport> {
    if surface.boundary {
        return Err(Error::NotApplicable("quadraticity is undefined for a boundary fit".into()));
    }
    let i = DMatrix::from_row_slice(2, 2, &[
        surface.information[0][0],
        surface.information[0][1],
        surface.information[1][0],
        surface.information[1][1],
    ]);
    let m = surface.beta1.len();
    let mut score: f64 = 0.0;
    for (a, &b0) in surface.beta0.iter().enumerate() {
        for (b, &b1) in surface.beta1.iter().enumerate() {
            let d = [b0 - surface.center[0], b1 - surface.center[1]];
            let maha2 = i[(0, 0)] * d[0] * d[0] + 2.0 * i[(0, 1)] * d[0] * d[1] + i[(1, 1)] * d[1] * d[1];
            if maha2 <= 4.0 {
                let k = a * m + b;
                score = score.max((surface.loglik[k] - surface.loglik_quad[k]).abs());
            }
        }
    }
    Ok(QuadraticityReport { score, pass: score < threshold, threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::lgamma;

    #[test]
    fn saddlepoint_gaussian_is_exact() {
        for (y, mu, phi) in [(0.3, -1.0, 2.0), (5.0, 4.0, 0.1), (-2.0, 3.0, 9.0)] {
            let exact = Family::Gaussian.log_density(y, mu, phi, 1.0);
            assert!((saddlepoint_logpdf(Family::Gaussian, y, mu, phi).unwrap() - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn saddlepoint_poisson_close_to_pmf() {
        let pmf = |y: f64, mu: f64| (y * mu.ln() - mu - lgamma(y + 1.0)).exp();
        let r = saddlepoint_logpdf(Family::Poisson, 5.0, 5.0, 1.0).unwrap().exp() / pmf(5.0, 5.0);
        assert!((r - 1.0).abs() < 0.03);
        let r = saddlepoint_logpdf(Family::Poisson, 4.0, 7.0, 1.0).unwrap().exp() / pmf(4.0, 7.0);
        assert!((0.97..=1.03).contains(&r));
        assert!(matches!(saddlepoint_logpdf(Family::Poisson, 0.0, 1.0, 1.0), Err(Error::Support(_))));
    }
}
