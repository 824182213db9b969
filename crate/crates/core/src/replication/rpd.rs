use std::f64::consts::{LN_10, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::glm::FitResult;
use crate::numerics::{integrate, phi, phi_inv};
use crate::posterior::LaplacePosterior;

/// Predictive law of the replicate coefficients and of the replicate
/// estimator, both centred on the initial estimate.
#[derive(Debug, Clone)]
pub struct PredictivePosterior {
    /// N(β̂, 3Σ).
    pub predictive: LaplacePosterior,
    /// N(β̂, 2Σ).
    pub replicate_estimator: LaplacePosterior,
}

/// Exact-replication predictive distribution with Σ = φ·cov_unscaled.
pub fn predictive_posterior(fit: &FitResult, phi_scale: f64) -> Result<PredictivePosterior> {
    if fit.boundary || !fit.converged {
        return Err(Error::NotApplicable("predictive posterior needs a converged interior fit".into()));
    }
    if !(phi_scale > 0.0) {
        return Err(domain(format!("scale must be positive, got {phi_scale}")));
    }
    let sigma = fit.cov(phi_scale);
    Ok(PredictivePosterior {
        predictive: LaplacePosterior::normal(fit.beta_hat.clone(), &sigma * 3.0),
        replicate_estimator: LaplacePosterior::normal(fit.beta_hat.clone(), &sigma * 2.0),
    })
}

fn check_pi(pi: f64, closed_top: bool) -> Result<()> {
    let ok = pi > 0.0 && if closed_top { pi <= 1.0 } else { pi < 1.0 };
    if ok {
        Ok(())
    } else {
        Err(domain(format!("π = {pi} outside the allowed range")))
    }
}

/// π_rep = 2Φ(Φ⁻¹(π_init/2)/√3).
pub fn predictive_pi(pi_init: f64) -> Result<f64> {
    check_pi(pi_init, true)?;
    if pi_init == 1.0 {
        return Ok(1.0);
    }
    Ok(2.0 * phi(phi_inv(0.5 * pi_init) / 3f64.sqrt()))
}

/// Initial-study z on the negative half-line.
fn z_init(pi_init: f64) -> f64 {
    phi_inv(0.5 * pi_init)
}

/// Density of x = −log10 π_rep when the replicate z is N(z_init, √2).
///
/// Evaluated in log space: the Jacobian 10^{−x}·ln 10·√(π/2)·exp(a²/2)
/// with a = Φ⁻¹(10^{−x}/2), times N(a | z, √2) + N(−a | z, √2).
pub fn rpd_pdf(log10p: f64, pi_init: f64) -> Result<f64> {
    check_pi(pi_init, false)?;
    if !(log10p >= 0.0) {
        return Err(domain(format!("−log10 p = {log10p} must be non-negative")));
    }
    Ok(pdf_unchecked(log10p, z_init(pi_init)))
}

fn pdf_unchecked(x: f64, t: f64) -> f64 {
    let q = 10f64.powf(-x);
    if q <= 0.0 {
        return 0.0;
    }
    let a = phi_inv(0.5 * q);
    let log_jac = -x * LN_10 + LN_10.ln() + 0.5 * (PI / 2.0).ln() + 0.5 * a * a;
    let l1 = log_normal_pdf(a, t, SQRT_2);
    let l2 = log_normal_pdf(-a, t, SQRT_2);
    let m = l1.max(l2);
    (log_jac + m + ((l1 - m).exp() + (l2 - m).exp()).ln()).exp()
}

fn log_normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - 0.5 * (2.0 * PI).ln() - sd.ln()
}

/// P(−log10 π_rep ≤ x) = Φ((|a| − z)/√2) − Φ((−|a| − z)/√2).
pub fn rpd_cdf(log10p: f64, pi_init: f64) -> Result<f64> {
    check_pi(pi_init, false)?;
    if !(log10p >= 0.0) {
        return Err(domain(format!("−log10 p = {log10p} must be non-negative")));
    }
    Ok(cdf_unchecked(log10p, z_init(pi_init)))
}

fn survival(x: f64, t: f64) -> f64 {
    let q = 10f64.powf(-x);
    if q <= 0.0 {
        return 0.0;
    }
    let a = -phi_inv(0.5 * q).min(0.0);
    phi((t - a) / SQRT_2) + phi((-a - t) / SQRT_2)
}

fn cdf_unchecked(x: f64, t: f64) -> f64 {
    let s = survival(x, t);
    if s < 0.5 {
        return 1.0 - s;
    }
    let a = -phi_inv(0.5 * 10f64.powf(-x)).min(0.0);
    (phi((a - t) / SQRT_2) - phi((-a - t) / SQRT_2)).max(0.0)
}

/// Moments of the RPD on the −log10 and raw scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpdMoments {
    pub mean_log10: f64,
    pub sd_log10: f64,
    pub mean_raw: f64,
    pub sd_raw: f64,
}

/// Upper integration limit beyond which the RPD carries < 1e-16.
fn x_limit(t: f64) -> f64 {
    let mut x = 30.0;
    while survival(x, t) > 1e-16 && x < 300.0 {
        x += 10.0;
    }
    x
}

/// Moments by adaptive quadrature of the density.
pub fn rpd_moments(pi_init: f64) -> Result<RpdMoments> {
    check_pi(pi_init, false)?;
    let t = z_init(pi_init);
    let hi = x_limit(t);
    let q = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        Ok(integrate(|x| f(x) * pdf_unchecked(x, t), 0.0, hi, 1e-14, 1e-11)?.value)
    };
    let m1 = q(&|x| x)?;
    let m2 = q(&|x| x * x)?;
    let r1 = q(&|x| 10f64.powf(-x))?;
    let r2 = q(&|x| 10f64.powf(-2.0 * x))?;
    Ok(RpdMoments {
        mean_log10: m1,
        sd_log10: (m2 - m1 * m1).max(0.0).sqrt(),
        mean_raw: r1,
        sd_raw: (r2 - r1 * r1).max(0.0).sqrt(),
    })
}

/// Total mass of the density over [0, ∞) by quadrature.
pub fn rpd_mass(pi_init: f64) -> Result<f64> {
    check_pi(pi_init, false)?;
    let t = z_init(pi_init);
    Ok(integrate(|x| pdf_unchecked(x, t), 0.0, x_limit(t), 1e-14, 1e-12)?.value + survival(x_limit(t), t))
}

/// Tabulated RPD on [0, cap] with its moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpdCurve {
    pub pi_init: f64,
    pub x: Vec<f64>,
    pub pdf: Vec<f64>,
    pub cdf: Vec<f64>,
    /// Probability beyond the cap, from the closed-form CDF.
    pub tail_mass: f64,
    pub moments: RpdMoments,
}

impl RpdCurve {
    /// Trapezoid integral of the tabulated density plus the tail mass.
    pub fn total_mass(&self) -> f64 {
        let body: f64 = (1..self.x.len()).map(|k| 0.5 * (self.pdf[k] + self.pdf[k - 1]) * (self.x[k] - self.x[k - 1])).sum();
        body + self.tail_mass
    }
}

pub const RPD_CAP: f64 = 30.0;

/// RPD curve with `points` equally spaced nodes on [0, cap].
pub fn rpd_curve(pi_init: f64, cap: f64, points: usize) -> Result<RpdCurve> {
    check_pi(pi_init, false)?;
    if !(cap > 0.0) || points < 2 {
        return Err(Error::Config(format!("rpd grid needs cap > 0 and ≥ 2 points, got {cap}, {points}")));
    }
    let t = z_init(pi_init);
    let x: Vec<f64> = (0..points).map(|k| cap * k as f64 / (points - 1) as f64).collect();
    let pdf = x.iter().map(|&v| pdf_unchecked(v, t)).collect();
    let cdf = x.iter().map(|&v| cdf_unchecked(v, t)).collect();
    Ok(RpdCurve { pi_init, x, pdf, cdf, tail_mass: survival(cap, t), moments: rpd_moments(pi_init)? })
}

/// Value of x with rpd_cdf(x) = 0.5, by bisection.
pub fn rpd_median(pi_init: f64) -> Result<f64> {
    check_pi(pi_init, false)?;
    let t = z_init(pi_init);
    let (mut lo, mut hi) = (0.0, x_limit(t));
    if cdf_unchecked(lo, t) >= 0.5 {
        return Ok(0.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf_unchecked(mid, t) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predictive_map_values() {
        assert_eq!(predictive_pi(1.0).unwrap(), 1.0);
        assert!((predictive_pi(3.23e-5).unwrap() - 0.0164).abs() < 1e-4);
        assert!((predictive_pi(7.79e-8).unwrap() - 0.0019).abs() < 1e-4);
        assert!(predictive_pi(0.0006).unwrap() < 0.05);
        assert!(predictive_pi(0.0007).unwrap() > 0.05);
        assert!(predictive_pi(0.0).is_err());
    }

    #[test]
    fn pdf_is_derivative_of_cdf() {
        for &pi in &[0.5, 0.05, 1e-5] {
            for &x in &[0.1, 1.0, 3.0, 7.5] {
                let h = 1e-5;
                let fd = (rpd_cdf(x + h, pi).unwrap() - rpd_cdf(x - h, pi).unwrap()) / (2.0 * h);
                let p = rpd_pdf(x, pi).unwrap();
                assert!((fd - p).abs() < 1e-6 * p.max(1.0), "π={pi} x={x}: {fd} vs {p}");
            }
        }
    }

    #[test]
    fn cdf_endpoints() {
        assert_eq!(rpd_cdf(0.0, 0.05).unwrap(), 0.0);
        assert!((rpd_cdf(60.0, 0.05).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn curve_mass_and_monotone_cdf() {
        let c = rpd_curve(0.05, RPD_CAP, 3001).unwrap();
        assert!((c.total_mass() - 1.0).abs() < 1e-4);
        assert!(c.cdf.windows(2).all(|w| w[1] >= w[0]));
        assert!(c.pdf.iter().all(|v| *v >= 0.0));
    }
}
