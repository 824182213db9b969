//! Priors that test a value or explore a range, the finite-world flat
//! prior, local-uniformity diagnostics and scale priors.
//!
//! Every kind is a Gaussian kernel N(β | β₀, σ) with the centre and/or the
//! width integrated against a hyperprior: test kinds fix β₀, explore kinds
//! average β₀ uniformly over `[lo, hi]`; σ is fixed, uniform on
//! `[σmin, σmax]`, or scaled-inverse-χ² (giving a Student-t).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::glm::Link;
use crate::numerics::{e1_unchecked, integrate, normal_logpdf, phi, student_t_logpdf};

/// Closed interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn check(&self, what: &str) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Config(format!("{what}: bounds [{}, {}] not strictly ordered", self.lo, self.hi)));
        }
        Ok(())
    }
}

impl From<[f64; 2]> for Interval {
    fn from(v: [f64; 2]) -> Self {
        Self { lo: v[0], hi: v[1] }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// Prior on a single regression coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    /// Improper constant density on the whole line.
    Flat,
    FlatHypercube { bounds: Interval },
    TestFixedSigma { beta0_prior: f64, sigma_prior: f64 },
    ExploreFixedSigma { bounds: Interval, sigma_prior: f64 },
    TestUniformSigma { beta0_prior: f64, sigma_bounds: Interval },
    ExploreUniformSigma { bounds: Interval, sigma_bounds: Interval },
    /// Student-t with `nu0` degrees of freedom and scale `s`.
    TestInvchisq { beta0_prior: f64, nu0: f64, s: f64 },
    ExploreInvchisq { bounds: Interval, nu0: f64, s: f64 },
}

impl PriorSpec {
    pub fn cauchy(center: f64, scale: f64) -> Self {
        PriorSpec::TestInvchisq { beta0_prior: center, nu0: 1.0, s: scale }
    }

    pub fn student_t(center: f64, df: f64, scale: f64) -> Self {
        PriorSpec::TestInvchisq { beta0_prior: center, nu0: df, s: scale }
    }

    pub fn normal(center: f64, sd: f64) -> Self {
        PriorSpec::TestFixedSigma { beta0_prior: center, sigma_prior: sd }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive, got {v}")))
            }
        };
        match *self {
            PriorSpec::Flat => Ok(()),
            PriorSpec::FlatHypercube { bounds } => bounds.check("flat_hypercube"),
            PriorSpec::TestFixedSigma { sigma_prior, .. } => pos(sigma_prior, "sigma_prior"),
            PriorSpec::ExploreFixedSigma { bounds, sigma_prior } => {
                bounds.check("explore_fixed_sigma")?;
                pos(sigma_prior, "sigma_prior")
            }
            PriorSpec::TestUniformSigma { sigma_bounds, .. } => {
                sigma_bounds.check("sigma_bounds")?;
                pos(sigma_bounds.lo, "sigma_min")
            }
            PriorSpec::ExploreUniformSigma { bounds, sigma_bounds } => {
                bounds.check("explore_uniform_sigma")?;
                sigma_bounds.check("sigma_bounds")?;
                pos(sigma_bounds.lo, "sigma_min")
            }
            PriorSpec::TestInvchisq { nu0, s, .. } => {
                pos(nu0, "nu0")?;
                pos(s, "s")
            }
            PriorSpec::ExploreInvchisq { bounds, nu0, s } => {
                bounds.check("explore_invchisq")?;
                pos(nu0, "nu0")?;
                pos(s, "s")
            }
        }
    }

    /// Support bounds, if the density vanishes outside them.
    pub fn support(&self) -> Option<Interval> {
        match *self {
            PriorSpec::FlatHypercube { bounds }
            | PriorSpec::ExploreFixedSigma { bounds, .. }
            | PriorSpec::ExploreUniformSigma { bounds, .. }
            | PriorSpec::ExploreInvchisq { bounds, .. } => Some(bounds),
            _ => None,
        }
    }
}

/// Log prior density at `beta`; `-inf` outside an explore or hypercube range.
///
/// Test kinds and the hypercube are normalized. Explore kinds are the test
/// kernel averaged over a uniform hyperprior on the centre and then
/// truncated to the bounds, so they integrate to slightly less than one.
pub fn prior_logpdf(spec: &PriorSpec, beta: f64) -> f64 {
    if let Some(b) = spec.support() {
        if !b.contains(beta) {
            return f64::NEG_INFINITY;
        }
    }
    match *spec {
        PriorSpec::Flat => 0.0,
        PriorSpec::FlatHypercube { bounds } => -bounds.len().ln(),
        PriorSpec::TestFixedSigma { beta0_prior, sigma_prior } => normal_logpdf(beta, beta0_prior, sigma_prior),
        PriorSpec::ExploreFixedSigma { bounds, sigma_prior } => {
            // exact average of the Gaussian kernel over the centre
            let a = (beta - bounds.hi) / sigma_prior;
            let b = (beta - bounds.lo) / sigma_prior;
            (normal_mass(a, b) / bounds.len()).ln()
        }
        PriorSpec::TestUniformSigma { beta0_prior, sigma_bounds } => {
            uniform_sigma_density(beta - beta0_prior, sigma_bounds).ln()
        }
        PriorSpec::ExploreUniformSigma { bounds, sigma_bounds } => {
            average_over_centre(bounds, beta, |c| uniform_sigma_density(beta - c, sigma_bounds)).ln()
        }
        PriorSpec::TestInvchisq { beta0_prior, nu0, s } => student_t_logpdf((beta - beta0_prior) / s, nu0) - s.ln(),
        PriorSpec::ExploreInvchisq { bounds, nu0, s } => {
            average_over_centre(bounds, beta, |c| (student_t_logpdf((beta - c) / s, nu0) - s.ln()).exp()).ln()
        }
    }
}

/// P(a < Z < b) without cancellation in either tail.
fn normal_mass(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        phi(-a) - phi(-b)
    } else {
        phi(b) - phi(a)
    }
}

/// ∫ N(d | 0, σ) dσ / (σmax − σmin) over σ ∈ [σmin, σmax].
///
/// Equals [Γ(0, d²/2σmax²) − Γ(0, d²/2σmin²)] / [2√(2π)(σmax − σmin)]; at
/// d = 0 the removable singularity takes its limit
/// log(σmax/σmin) / [√(2π)(σmax − σmin)].
pub fn uniform_sigma_density(d: f64, sigma_bounds: Interval) -> f64 {
    let (lo, hi) = (sigma_bounds.lo, sigma_bounds.hi);
    let denom = (2.0 * PI).sqrt() * (hi - lo);
    let d2 = d * d;
    if d2 < 1e-280 {
        return (hi / lo).ln() / denom;
    }
    let u_hi = d2 / (2.0 * hi * hi);
    let u_lo = d2 / (2.0 * lo * lo);
    (e1_unchecked(u_hi) - e1_unchecked(u_lo)) / (2.0 * denom)
}

fn average_over_centre(bounds: Interval, beta: f64, kernel: impl Fn(f64) -> f64) -> f64 {
    // split at β where the uniform-σ kernel has its log singularity
    let mut total = 0.0;
    let mut edges = vec![bounds.lo];
    if beta > bounds.lo && beta < bounds.hi {
        edges.push(beta);
    }
    edges.push(bounds.hi);
    for w in edges.windows(2) {
        total += integrate(&kernel, w[0], w[1], 1e-14, 1e-12).map(|q| q.value).unwrap_or(f64::NAN);
    }
    total / bounds.len()
}

/// Max relative deviation (max − min)/max of the density over a grid.
pub fn local_uniformity_check(spec: &PriorSpec, interval: Interval, resolution: usize) -> Result<f64> {
    spec.validate()?;
    if resolution < 2 {
        return Err(domain("resolution must be at least 2"));
    }
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for i in 0..resolution {
        let x = interval.lo + interval.len() * i as f64 / (resolution - 1) as f64;
        let v = prior_logpdf(spec, x).exp();
        if !(v > 0.0) {
            return Err(Error::Support(format!("prior density is zero at {x}")));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((hi - lo) / hi)
}

/// Per-coefficient admissible ranges implied by a bounded response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteWorldBounds {
    pub intervals: Vec<Interval>,
    /// The 1/p factor applied to the hypercube density.
    pub prior_scale: f64,
    /// Product of interval lengths.
    pub volume: f64,
}

impl FiniteWorldBounds {
    /// Log of p⁻¹·Π 1/len_i inside the box, as the scaled prior is written.
    pub fn scaled_log_density(&self, beta: &[f64]) -> f64 {
        if self.inside(beta) {
            self.prior_scale.ln() - self.volume.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Log of the density that integrates to one over the box.
    pub fn normalized_log_density(&self, beta: &[f64]) -> f64 {
        if self.inside(beta) {
            -self.volume.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn inside(&self, beta: &[f64]) -> bool {
        beta.len() == self.intervals.len() && beta.iter().zip(&self.intervals).all(|(b, i)| i.contains(*b))
    }

    /// One hypercube prior per coefficient.
    pub fn priors(&self) -> Vec<PriorSpec> {
        self.intervals.iter().map(|&bounds| PriorSpec::FlatHypercube { bounds }).collect()
    }
}

/// Each coefficient alone must carry the linear predictor across the
/// response range: g(y_min) ≤ β_i·x ≤ g(y_max) for x in the covariate's
/// range. The returned interval is the hull of the four endpoint ratios.
pub fn finite_world_bounds(link: Link, y_range: Interval, x_ranges: &[Interval], p: usize) -> Result<FiniteWorldBounds> {
    if x_ranges.len() != p || p == 0 {
        return Err(Error::Dimension(format!("{} covariate ranges for p = {p}", x_ranges.len())));
    }
    let (g_lo, g_hi) = (link.link(y_range.lo), link.link(y_range.hi));
    if !g_lo.is_finite() || !g_hi.is_finite() || y_range.lo > y_range.hi {
        return Err(domain(format!(
            "response range [{}, {}] outside the {} link's domain",
            y_range.lo,
            y_range.hi,
            link.name()
        )));
    }
    let mut intervals = Vec::with_capacity(p);
    for xr in x_ranges {
        if xr.lo <= 0.0 && xr.hi >= 0.0 {
            return Err(domain(format!("covariate range [{}, {}] contains zero", xr.lo, xr.hi)));
        }
        let c = [g_lo / xr.lo, g_lo / xr.hi, g_hi / xr.lo, g_hi / xr.hi];
        let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        intervals.push(Interval::new(lo, hi));
    }
    let volume = intervals.iter().map(|i| i.len()).product();
    Ok(FiniteWorldBounds { intervals, prior_scale: 1.0 / p as f64, volume })
}

/// The six kernel priors with σ ≈ 1000 (fixed at 1000, uniform on
/// [900, 1100], or the scale of a Cauchy) and explore range [−200, 200].
pub fn reference_priors() -> Vec<PriorSpec> {
    let bounds = Interval::new(-200.0, 200.0);
    let sigma_bounds = Interval::new(900.0, 1100.0);
    vec![
        PriorSpec::TestFixedSigma { beta0_prior: 0.0, sigma_prior: 1000.0 },
        PriorSpec::ExploreFixedSigma { bounds, sigma_prior: 1000.0 },
        PriorSpec::TestUniformSigma { beta0_prior: 0.0, sigma_bounds },
        PriorSpec::ExploreUniformSigma { bounds, sigma_bounds },
        PriorSpec::TestInvchisq { beta0_prior: 0.0, nu0: 1.0, s: 1000.0 },
        PriorSpec::ExploreInvchisq { bounds, nu0: 1.0, s: 1000.0 },
    ]
}

/// Prior on the scale parameter φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalePriorSpec {
    /// p(φ) ∝ 1/φ.
    Jeffreys,
    /// p(φ) ∝ 1 on `bounds`.
    UniformBounded { bounds: Interval },
}

pub fn scale_prior_logpdf(spec: &ScalePriorSpec, phi: f64) -> f64 {
    if !(phi > 0.0) {
        return f64::NEG_INFINITY;
    }
    match *spec {
        ScalePriorSpec::Jeffreys => -phi.ln(),
        ScalePriorSpec::UniformBounded { bounds } => {
            if bounds.contains(phi) {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
    }
}
