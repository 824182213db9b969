//! Wald p-values, π-values from posteriors and samples, and tail
//! comparisons between the normal and Student-t reference laws.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::glm::FitResult;
use crate::numerics::{fit_gaussian_mixture_1d, phi, t_cdf, MixtureModel1D};
use crate::posterior::{LaplacePosterior, PosteriorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectDirection {
    Positive,
    Negative,
}

impl EffectDirection {
    fn of(delta: f64) -> Self {
        if delta < 0.0 {
            EffectDirection::Negative
        } else {
            EffectDirection::Positive
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            EffectDirection::Positive => 1.0,
            EffectDirection::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    WaldNormal,
    WaldT,
    PosteriorAnalytic,
    PosteriorEmpirical,
    PosteriorMixture,
    PosteriorGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub z: f64,
    pub direction: EffectDirection,
    pub p_or_pi: f64,
    pub method: TailMethod,
    pub dof: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaldDist {
    Normal,
    T,
}

/// 2·min(F(z), 1 − F(z)) for a symmetric law, evaluated as 2F(−|z|) so the
/// upper tail does not cancel. Clamped below at the smallest normal double
/// so an underflowing tail still reports a positive value.
fn two_sided(cdf: impl Fn(f64) -> f64, z: f64) -> f64 {
    (2.0 * cdf(-z.abs())).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Wald test of β_i = beta0 with standard error √(φ·cov_unscaled[i,i]).
///
/// The t reference uses `dof`, defaulting to n − p.
pub fn wald_pvalue(fit: &FitResult, phi_scale: f64, index: usize, beta0: f64, dist: WaldDist, dof: Option<u64>) -> Result<TailReport> {
    if index >= fit.p {
        return Err(Error::Dimension(format!("coefficient {index} of {}", fit.p)));
    }
    if !(phi_scale > 0.0) {
        return Err(domain(format!("scale must be positive, got {phi_scale}")));
    }
    let z = (fit.beta_hat[index] - beta0) / fit.se(index, phi_scale);
    let (p, method, dof) = match dist {
        WaldDist::Normal => (two_sided(phi, z), TailMethod::WaldNormal, None),
        WaldDist::T => {
            let nu = dof.unwrap_or((fit.n - fit.p) as u64);
            if nu == 0 {
                return Err(Error::DegreesOfFreedom("t reference with zero degrees of freedom".into()));
            }
            (two_sided(|v| t_cdf(v, nu as f64), z), TailMethod::WaldT, Some(nu))
        }
    };
    let warning = fit.boundary.then(|| "boundary fit: estimate diverges, p-value is not meaningful".to_string());
    Ok(TailReport { z, direction: EffectDirection::of(z), p_or_pi: p, method, dof, warning })
}

/// π-value from the normal or Student-t marginal of coefficient `index`.
pub fn pi_value_analytic(posterior: &LaplacePosterior, index: usize, beta0: f64) -> Result<TailReport> {
    if index >= posterior.dim() {
        return Err(Error::Dimension(format!("coefficient {index} of {}", posterior.dim())));
    }
    let (loc, scale, _) = posterior.marginal(index);
    let z = (loc - beta0) / scale;
    let (p, dof) = match posterior.kind {
        PosteriorKind::NormalKnownPhi => (two_sided(phi, z), None),
        PosteriorKind::Mvt { dof } => (two_sided(|v| t_cdf(v, dof as f64), z), Some(dof as u64)),
    };
    Ok(TailReport { z, direction: EffectDirection::of(z), p_or_pi: p, method: TailMethod::PosteriorAnalytic, dof, warning: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMethod {
    Empirical,
    Mixture,
}

/// Minimum sample count for the mixture-smoothed tail.
pub const MIXTURE_MIN_SAMPLES: usize = 1000;

/// π-value from posterior draws.
///
/// The mixture method fits a Gaussian mixture to `samples − beta0` and
/// sums w_k·2Φ(−|m_k|/s_k). The direction always comes from the majority
/// side of the raw draws.
pub fn pi_value_from_samples(samples: &[f64], beta0: f64, method: SampleMethod) -> Result<TailReport> {
    if samples.is_empty() {
        return Err(domain("no samples"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(domain("non-finite sample"));
    }
    let n = samples.len() as f64;
    let above = samples.iter().filter(|&&v| v >= beta0).count();
    let minority = above.min(samples.len() - above);
    let empirical = (2.0 * minority as f64 / n).min(1.0);
    let direction = if 2 * above >= samples.len() { EffectDirection::Positive } else { EffectDirection::Negative };
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    let z = if sd > 0.0 { (mean - beta0) / sd } else { 0.0 };
    let empirical_report =
        |warning: Option<String>| TailReport { z, direction, p_or_pi: empirical, method: TailMethod::PosteriorEmpirical, dof: None, warning };
    match method {
        SampleMethod::Empirical => Ok(empirical_report(None)),
        SampleMethod::Mixture => {
            if samples.len() < MIXTURE_MIN_SAMPLES {
                return Err(domain(format!("mixture tail needs at least {MIXTURE_MIN_SAMPLES} samples, got {}", samples.len())));
            }
            let shifted: Vec<f64> = samples.iter().map(|v| v - beta0).collect();
            match fit_gaussian_mixture_1d(&shifted, 5) {
                Ok(m) => Ok(TailReport {
                    z,
                    direction,
                    p_or_pi: m.two_sided_tail_at_zero(),
                    method: TailMethod::PosteriorMixture,
                    dof: None,
                    warning: None,
                }),
                Err(Error::Degeneracy(msg)) => Ok(empirical_report(Some(format!("mixture fit degenerate ({msg}); empirical tail used")))),
                Err(e) => Err(e),
            }
        }
    }
}

/// The fitted mixture behind a mixture-smoothed π, for reporting.
pub fn tail_mixture(samples: &[f64], beta0: f64) -> Result<MixtureModel1D> {
    let shifted: Vec<f64> = samples.iter().map(|v| v - beta0).collect();
    fit_gaussian_mixture_1d(&shifted, 5)
}

/// Signed directional certainty sign·(1 − π) = P(β ≥ β₀) − P(β < β₀).
pub fn direction_estimate(pi: f64, direction: EffectDirection) -> Result<f64> {
    if !(pi > 0.0 && pi <= 1.0) {
        return Err(domain(format!("π = {pi} not in (0, 1]")));
    }
    Ok(direction.sign() * (1.0 - pi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailComparison {
    pub p_normal: f64,
    pub p_t_jeffreys: f64,
    pub p_t_uniform: f64,
}

/// Two-sided tails of z under N(0,1), t_{n−p}, and the rescaled t_{n−p−2}.
pub fn tail_comparison(z: f64, n_minus_p: u64) -> Result<TailComparison> {
    if n_minus_p <= 2 {
        return Err(Error::DegreesOfFreedom(format!("n − p = {n_minus_p} must exceed 2")));
    }
    if z.is_nan() {
        return Err(domain("z is NaN"));
    }
    let a = -z.abs();
    let nu = n_minus_p as f64;
    Ok(TailComparison {
        p_normal: 2.0 * phi(a),
        p_t_jeffreys: 2.0 * t_cdf(a, nu),
        p_t_uniform: 2.0 * t_cdf(a * (nu / (nu - 2.0)).sqrt(), nu - 2.0),
    })
}
