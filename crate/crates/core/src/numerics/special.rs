//! Normal, Student-t and exponential-integral functions.
//!
//! erfc and ln Γ come from `libm` (the musl/FreeBSD kernels, accurate to
//! an ulp or so, including the far tail). `statrs` supplies the regularized
//! incomplete beta and a starting value for erfc⁻¹, which is then polished
//! against `libm::erfc`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use statrs::function::{beta::beta_reg, erf::erfc_inv as erfc_inv_seed};

use crate::error::{domain, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Φ(x) without input checks. NaN propagates.
#[inline]
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Log of the normal density N(x | mean, sd).
#[inline]
pub fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - LN_SQRT_2PI - sd.ln()
}

/// Standard normal CDF, accurate far into the lower tail.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(domain("std_normal_cdf: NaN input"));
    }
    Ok(phi(x))
}

/// Φ⁻¹(p) without input checks; callers guarantee 0 < p < 1.
pub(crate) fn phi_inv(p: f64) -> f64 {
    if p > 0.5 {
        return -phi_inv(1.0 - p);
    }
    let mut x = -SQRT_2 * erfc_inv_seed(2.0 * p);
    // Halley steps on Φ(x) − p; converge to full relative precision in p.
    for _ in 0..2 {
        let d = std_normal_pdf(x);
        if d == 0.0 || !x.is_finite() {
            break;
        }
        let r = (phi(x) - p) / d;
        x -= r / (1.0 + 0.5 * x * r);
    }
    x
}

/// Standard normal quantile.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("std_normal_quantile: p = {p} not in (0,1)")));
    }
    Ok(phi_inv(p))
}

/// Student-t CDF with `nu` degrees of freedom (`nu` may be fractional).
pub fn student_t_cdf(x: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0) || x.is_nan() {
        return Err(domain(format!("student_t_cdf: nu = {nu}, x = {x}")));
    }
    Ok(t_cdf(x, nu))
}

pub(crate) fn t_cdf(x: f64, nu: f64) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let x2 = x * x;
    // lower tail P(T < -|x|); pick the incomplete-beta argument that stays away from 1
    let tail = if x2 < nu {
        let w = x2 / (nu + x2);
        0.5 * (1.0 - beta_reg(0.5, 0.5 * nu, w))
    } else {
        let w = nu / (nu + x2);
        0.5 * beta_reg(0.5 * nu, 0.5, w)
    };
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Log density of the standard Student-t.
pub fn student_t_logpdf(x: f64, nu: f64) -> f64 {
    libm::lgamma(0.5 * (nu + 1.0)) - libm::lgamma(0.5 * nu) - 0.5 * (nu * PI).ln()
        - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()
}

/// Upper incomplete gamma at zero shape, Γ(0, x) = E₁(x).
pub fn exp_integral_gamma0(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("Γ(0, x) needs x > 0, got {x}")));
    }
    Ok(e1(x))
}

pub(crate) fn e1(x: f64) -> f64 {
    if x <= 1.0 {
        // E1(x) = -γ - ln x - Σ (-x)^k / (k·k!)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - x.ln() - sum
    } else {
        // modified Lentz on the continued fraction e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let a = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Inverse complementary error function on (0, 2).
pub fn erfc_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 2.0) {
        return Err(domain(format!("erfc_inverse: p = {p} not in (0,2)")));
    }
    Ok(erfc_inv_polished(p))
}

pub(crate) fn erfc_inv_polished(p: f64) -> f64 {
    let mut x = erfc_inv_seed(p);
    let two_over_sqrt_pi = 2.0 / PI.sqrt();
    for _ in 0..2 {
        let d = -two_over_sqrt_pi * (-x * x).exp();
        if d == 0.0 {
            break;
        }
        let r = (libm::erfc(x) - p) / d;
        // Halley: f'' / f' = -2x
        x -= r / (1.0 + x * r);
    }
    x
}

/// Plain erfc re-export so callers need not depend on statrs.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// ln Γ(x).
#[inline]
pub fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}
