use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::FitResult;
use crate::priors::ScalePriorSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PosteriorKind {
    NormalKnownPhi,
    Mvt { dof: usize },
}

/// Normal or multivariate-t posterior for β.
///
/// `cov` is the covariance for the normal kind and the scale matrix for
/// the multivariate t.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacePosterior {
    pub mean: Vec<f64>,
    pub cov: DMatrix<f64>,
    pub kind: PosteriorKind,
}

impl LaplacePosterior {
    pub fn normal(mean: Vec<f64>, cov: DMatrix<f64>) -> Self {
        Self { mean, cov, kind: PosteriorKind::NormalKnownPhi }
    }

    /// Location, scale and (for the t kind) degrees of freedom of coordinate `i`.
    pub fn marginal(&self, i: usize) -> (f64, f64, Option<usize>) {
        let dof = match self.kind {
            PosteriorKind::NormalKnownPhi => None,
            PosteriorKind::Mvt { dof } => Some(dof),
        };
        (self.mean[i], self.cov[(i, i)].sqrt(), dof)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Scaled-inverse-χ² marginal of φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleMarginal {
    pub dof: usize,
    pub scale: f64,
    pub mode: f64,
}

impl ScaleMarginal {
    pub fn new(dof: usize, scale: f64) -> Self {
        Self { dof, scale, mode: dof as f64 * scale / (dof as f64 + 2.0) }
    }
}

#[derive(Debug, Clone)]
pub struct LaplaceResult {
    pub beta_posterior: LaplacePosterior,
    pub scale_marginal: Option<ScaleMarginal>,
    /// Normal posterior with φ fixed at D/(n−p).
    pub plug_in: LaplacePosterior,
}

/// Gaussian approximation to the posterior, with the scale integrated out
/// when the family has one.
///
/// Unknown-scale families follow four steps:
/// 1. conditional on φ, β | y ≈ N(β̂, φ·(XᵀWX)⁻¹), with β̂ free of φ;
/// 2. integrating β out of the joint leaves p(φ | y) ∝ p(φ)·φ^{−(n−p)/2}·exp(−D/2φ);
/// 3. under p(φ) ∝ 1/φ that is scaled-inverse-χ² with n−p degrees of
///    freedom and scale D/(n−p); a flat p(φ) removes two degrees of freedom;
/// 4. mixing the step-1 normal over that marginal gives a multivariate t
///    with the same degrees of freedom and scale matrix (D/dof)·(XᵀWX)⁻¹,
///    while plugging in the mode instead gives the empirical-Bayes normal.
///
/// A bounded uniform scale prior is treated as unbounded in step 3.
pub fn laplace_posterior(fit: &FitResult, scale_prior: &ScalePriorSpec) -> Result<LaplaceResult> {
    if fit.boundary {
        return Err(Error::NotApplicable("boundary fit has no Gaussian approximation".into()));
    }
    if !fit.converged {
        return Err(Error::NotApplicable("fit did not converge".into()));
    }
    if fit.family.known_scale() {
        let post = LaplacePosterior::normal(fit.beta_hat.clone(), fit.cov_unscaled.clone());
        return Ok(LaplaceResult { beta_posterior: post.clone(), scale_marginal: None, plug_in: post });
    }
    let resid = fit.n as i64 - fit.p as i64;
    let dof = match scale_prior {
        ScalePriorSpec::Jeffreys => resid,
        ScalePriorSpec::UniformBounded { .. } => resid - 2,
    };
    if dof <= 0 {
        return Err(Error::DegreesOfFreedom(format!("posterior dof {dof} for n = {}, p = {}", fit.n, fit.p)));
    }
    let dof = dof as usize;
    let marginal = ScaleMarginal::new(dof, fit.deviance / dof as f64);
    let beta_posterior = LaplacePosterior {
        mean: fit.beta_hat.clone(),
        cov: fit.cov(marginal.scale),
        kind: PosteriorKind::Mvt { dof },
    };
    let phi_map = fit.deviance / resid as f64;
    let plug_in = LaplacePosterior::normal(fit.beta_hat.clone(), fit.cov(phi_map));
    Ok(LaplaceResult { beta_posterior, scale_marginal: Some(marginal), plug_in })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::{fit_irls, Family, IrlsOptions, Link, ModelData};
    use crate::priors::Interval;

    fn gaussian_fit(y: Vec<f64>) -> FitResult {
        let n = y.len();
        let d = ModelData::new(y, DMatrix::from_element(n, 1, 1.0), None, None).unwrap();
        fit_irls(Family::Gaussian, Link::Identity, &d, IrlsOptions::default()).unwrap()
    }

    #[test]
    fn conjugate_student_t() {
        let y = vec![1.2, 0.4, 2.2, 1.9, 0.7, 1.1, 3.0];
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let s2 = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let r = laplace_posterior(&gaussian_fit(y), &ScalePriorSpec::Jeffreys).unwrap();
        let (loc, scale, dof) = r.beta_posterior.marginal(0);
        assert_eq!(dof, Some(6));
        assert!((loc - mean).abs() < 1e-10);
        assert!((scale - (s2 / n).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn uniform_prior_drops_two_dof() {
        let fit = gaussian_fit(vec![1.0, 2.0, 4.0, 3.0, 6.0, 5.0]);
        let j = laplace_posterior(&fit, &ScalePriorSpec::Jeffreys).unwrap();
        let u = laplace_posterior(&fit, &ScalePriorSpec::UniformBounded { bounds: Interval::new(0.0, 1e6) }).unwrap();
        let (dj, du) = (j.scale_marginal.unwrap(), u.scale_marginal.unwrap());
        assert_eq!(dj.dof, du.dof + 2);
        assert_eq!(dj.mode, dj.dof as f64 * dj.scale / (dj.dof as f64 + 2.0));
        // under the flat prior the mode is the plug-in value D/(n−p)
        assert!((du.mode - fit.deviance / 5.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_dof() {
        let fit = gaussian_fit(vec![1.0, 2.0, 4.0]);
        let u = laplace_posterior(&fit, &ScalePriorSpec::UniformBounded { bounds: Interval::new(0.0, 10.0) });
        assert!(matches!(u, Err(Error::DegreesOfFreedom(_))));
    }
}
