use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::glm::{fit_irls, Family, FitResult, IrlsOptions, Link, ScaleEstimates};
use crate::inference::{wald_pvalue, TailMethod, WaldDist};

use super::trials::{trial_design, TrialDesign, TrialRecord};

/// Wrapper written around every command result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub result: T,
}

impl<T> Envelope<T> {
    pub fn new(command: &str, seed: u64, result: T) -> Self {
        Self { command: command.to_string(), version: crate::VERSION.to_string(), seed, result }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub beta_hat: f64,
    pub se: f64,
    pub z: f64,
    pub p: f64,
    /// π-value when a posterior was computed.
    pub pi: Option<f64>,
    pub method: TailMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeRisk {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutput {
    pub study: String,
    pub outcome: String,
    pub family: Family,
    pub link: Link,
    pub converged: bool,
    pub boundary: bool,
    pub iterations: usize,
    pub deviance: f64,
    pub exposure_from_arm_size: bool,
    pub coefficients: Vec<CoefficientRow>,
    /// exp(β_treat) with its 95% Wald interval; absent for boundary fits.
    pub relative_risk: Option<RelativeRisk>,
    pub scale: Option<ScaleEstimates>,
}

pub const Z_975: f64 = 1.959_963_984_540_054;

/// Wald rows for every coefficient of a fit.
pub fn coefficient_rows(fit: &FitResult, names: &[&str]) -> Result<Vec<CoefficientRow>> {
    let phi = fit.inferential_phi();
    (0..fit.p)
        .map(|j| {
            let t = wald_pvalue(fit, phi, j, 0.0, WaldDist::Normal, None)?;
            Ok(CoefficientRow {
                name: names.get(j).map(|s| s.to_string()).unwrap_or_else(|| format!("beta{j}")),
                beta_hat: fit.beta_hat[j],
                se: fit.se(j, phi),
                z: t.z,
                p: t.p_or_pi,
                pi: None,
                method: t.method,
            })
        })
        .collect()
}

/// Poisson log-link fit of one study/outcome with its relative risk.
pub fn fit_trial(records: &[TrialRecord], study: &str, outcome: &str, exposure_scale: f64) -> Result<(TrialDesign, FitResult, FitOutput)> {
    let design = trial_design(records, study, outcome, exposure_scale)?;
    let fit = fit_irls(Family::Poisson, Link::Log, &design.data, IrlsOptions::default())?;
    let coefficients = coefficient_rows(&fit, &["intercept", "treat"])?;
    let relative_risk = (!fit.boundary).then(|| {
        let (b, se) = (coefficients[1].beta_hat, coefficients[1].se);
        RelativeRisk { estimate: b.exp(), lo: (b - Z_975 * se).exp(), hi: (b + Z_975 * se).exp() }
    });
    let out = FitOutput {
        study: design.rows[0].study.clone(),
        outcome: design.rows[0].outcome.clone(),
        family: fit.family,
        link: fit.link,
        converged: fit.converged,
        boundary: fit.boundary,
        iterations: fit.iterations,
        deviance: fit.deviance,
        exposure_from_arm_size: design.exposure_from_arm_size,
        coefficients,
        relative_risk,
        scale: fit.scale,
    };
    Ok((design, fit, out))
}
