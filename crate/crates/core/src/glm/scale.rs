use serde::{Deserialize, Serialize};

use super::fit::{log_likelihood, FitResult};
use super::{Family, ModelData};
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// The four scale estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleEstimates {
    /// Pearson χ²/(n−p).
    pub phi_mom: f64,
    /// D/n.
    pub phi_eql: f64,
    /// D/(n−p).
    pub phi_dev: f64,
    /// Maximizer of (p/2)·log φ + ll(β̂, φ).
    pub phi_mpl: f64,
}

/// All four estimators at the fitted means.
///
/// The modified profile likelihood uses the exact log density for the
/// gaussian and gamma families. Poisson and binomial have no free scale in
/// their exact density, so their profile is taken in the dispersion-model
/// (saddlepoint) form instead.
pub fn scale_estimates(family: Family, data: &ModelData, fit: &FitResult) -> Result<ScaleEstimates> {
    let n = data.n();
    let p = data.p();
    if n <= p {
        return Err(Error::DegreesOfFreedom(format!("n = {n}, p = {p}: scale not estimable")));
    }
    let dof = (n - p) as f64;
    let mu = &fit.fitted;
    let pearson: f64 = (0..n)
        .map(|i| data.weights[i] * (data.y[i] - mu[i]).powi(2) / family.variance(mu[i]))
        .sum();
    let d = fit.deviance;
    let phi_eql = d / n as f64;
    let phi_dev = phi_eql * n as f64 / dof;

    let profile = |log_phi: f64| -> f64 {
        let phi = log_phi.exp();
        let ll = match family {
            Family::Gaussian | Family::Gamma => {
                log_likelihood(family, fit.link, &fit.beta_hat, phi, data).unwrap_or(f64::NEG_INFINITY)
            }
            Family::Poisson | Family::Binomial => -0.5 * n as f64 * (LN_2PI + phi.ln()) - d / (2.0 * phi),
        };
        0.5 * p as f64 * log_phi + ll
    };
    let phi_mpl = if phi_dev > 0.0 {
        let c = phi_dev.ln();
        golden_max(profile, c - 5.0, c + 5.0, 1e-10).exp()
    } else {
        0.0
    };
    Ok(ScaleEstimates { phi_mom: pearson / dof, phi_eql, phi_dev, phi_mpl })
}

/// Golden-section search for the maximum of a unimodal function.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol * (1.0 + c.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
