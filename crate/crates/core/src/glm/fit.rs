use nalgebra::{DMatrix, DVector};

use super::scale::{scale_estimates, ScaleEstimates};
use super::{Family, Link, ModelData};
use crate::error::{domain, Error, Result};

/// IRLS controls.
#[derive(Debug, Clone, Copy)]
pub struct IrlsOptions {
    /// Relative deviance change |ΔD|/(|D| + 0.1).
    pub dev_tol: f64,
    /// Largest score component measured in standard-error units.
    pub score_tol: f64,
    pub max_iter: usize,
    /// |β̂_j| beyond this flags a boundary fit (poisson and binomial only).
    pub divergence_guard: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self { dev_tol: 1e-10, score_tol: 1e-8, max_iter: 50, divergence_guard: 15.0 }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub family: Family,
    pub link: Link,
    pub beta_hat: Vec<f64>,
    /// (XᵀWX)⁻¹ at β̂.
    pub cov_unscaled: DMatrix<f64>,
    pub deviance: f64,
    /// `None` when n = p leaves no residual degrees of freedom.
    pub scale: Option<ScaleEstimates>,
    pub converged: bool,
    pub boundary: bool,
    pub iterations: usize,
    /// Evaluated at the inferential scale (1 or φ̂_dev).
    pub loglik_at_mle: f64,
    pub fitted: Vec<f64>,
    pub n: usize,
    pub p: usize,
}

impl FitResult {
    /// φ used for Wald inference: 1 for known-scale families, φ̂_dev otherwise.
    pub fn inferential_phi(&self) -> f64 {
        if self.family.known_scale() {
            1.0
        } else {
            self.scale.map(|s| s.phi_dev).unwrap_or(1.0)
        }
    }

    pub fn se(&self, i: usize, phi: f64) -> f64 {
        (phi * self.cov_unscaled[(i, i)]).sqrt()
    }

    /// φ·(XᵀWX)⁻¹.
    pub fn cov(&self, phi: f64) -> DMatrix<f64> {
        &self.cov_unscaled * phi
    }
}

pub(crate) fn linear_predictor(data: &ModelData, beta: &[f64]) -> DVector<f64> {
    &data.x * DVector::from_column_slice(beta) + &data.offset
}

fn means(family: Family, link: Link, data: &ModelData, beta: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
    if beta.len() != data.p() {
        return Err(Error::Dimension(format!("beta has {} entries, design has {}", beta.len(), data.p())));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(domain("non-finite coefficient"));
    }
    let eta = linear_predictor(data, beta);
    let mu = eta.map(|e| link.inverse(e));
    if let Some(i) = mu.iter().position(|&m| !family.mean_in_domain(m)) {
        return Err(domain(format!("row {i}: mean {} outside the {} domain", mu[i], family.name())));
    }
    Ok((eta, mu))
}

/// Exact log-likelihood, including the c(y, φ) normalizing terms.
pub fn log_likelihood(family: Family, link: Link, beta: &[f64], phi: f64, data: &ModelData) -> Result<f64> {
    if !(phi > 0.0) {
        return Err(domain(format!("phi must be positive, got {phi}")));
    }
    let (_, mu) = means(family, link, data, beta)?;
    Ok((0..data.n()).map(|i| family.log_density(data.y[i], mu[i], phi, data.weights[i])).sum())
}

/// ∂ll/∂β; `phi` is ignored for known-scale families, as in the likelihood.
pub fn score(family: Family, link: Link, beta: &[f64], phi: f64, data: &ModelData) -> Result<Vec<f64>> {
    let phi = effective_phi(family, phi);
    let (eta, mu) = means(family, link, data, beta)?;
    let r = DVector::from_fn(data.n(), |i, _| {
        data.weights[i] * (data.y[i] - mu[i]) * link.dmu_deta(eta[i]) / (phi * family.variance(mu[i]))
    });
    Ok((data.x.transpose() * r).iter().cloned().collect())
}

/// Expected information XᵀWX/φ, with φ = 1 for known-scale families.
pub fn fisher_information(family: Family, link: Link, beta: &[f64], phi: f64, data: &ModelData) -> Result<DMatrix<f64>> {
    let phi = effective_phi(family, phi);
    let (eta, mu) = means(family, link, data, beta)?;
    let w = working_weights(family, link, data, &eta, &mu);
    Ok(weighted_crossprod(&data.x, &w) / phi)
}

fn effective_phi(family: Family, phi: f64) -> f64 {
    if family.known_scale() {
        1.0
    } else {
        phi
    }
}

fn working_weights(family: Family, link: Link, data: &ModelData, eta: &DVector<f64>, mu: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(data.n(), |i, _| {
        let d = link.dmu_deta(eta[i]);
        data.weights[i] * d * d / family.variance(mu[i])
    })
}

fn weighted_crossprod(x: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut xw = x.clone();
    for mut col in xw.column_iter_mut() {
        col.component_mul_assign(w);
    }
    x.transpose() * xw
}

/// D = Σ a_i·d(y_i, μ̂_i).
pub fn deviance(family: Family, data: &ModelData, mu_hat: &[f64]) -> Result<f64> {
    if mu_hat.len() != data.n() {
        return Err(Error::Dimension("mu_hat length differs from n".into()));
    }
    let mut d = 0.0;
    for (i, &m) in mu_hat.iter().enumerate() {
        if !family.mean_in_domain(m) {
            return Err(domain(format!("row {i}: mean {m} outside the {} domain", family.name())));
        }
        d += data.weights[i] * family.unit_deviance(data.y[i], m);
    }
    Ok(d)
}

fn start_mean(family: Family, y: f64, a: f64) -> f64 {
    match family {
        Family::Gaussian => y,
        Family::Poisson => {
            if y == 0.0 {
                0.5
            } else {
                y
            }
        }
        Family::Binomial => (y * a + 0.5) / (a + 1.0),
        Family::Gamma => y,
    }
}

/// Invert a symmetric positive-definite matrix, falling back to LU.
pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Ok(ch.inverse());
    }
    m.clone().try_inverse().ok_or_else(|| Error::Design("information matrix is singular".into()))
}

/// Fisher-scoring IRLS with step halving.
///
/// Convergence needs both the relative deviance change and the score (in
/// standard-error units) below tolerance; for a boundary fit the score
/// test is waived because the diverging coefficient never settles.
/// Running out of iterations returns [`Error::NotConverged`] carrying the
/// last iterate.
pub fn fit_irls(family: Family, link: Link, data: &ModelData, opts: IrlsOptions) -> Result<FitResult> {
    data.check_family(family)?;
    let n = data.n();
    let p = data.p();

    let mut mu = DVector::from_fn(n, |i, _| start_mean(family, data.y[i], data.weights[i]));
    if mu.iter().any(|&m| !family.mean_in_domain(m)) {
        return Err(domain("starting means outside the family domain"));
    }
    let mut eta = mu.map(|m| link.link(m));
    let mut dev = deviance(family, data, mu.as_slice())?;
    let mut beta: Option<DVector<f64>> = None;
    let mut converged = false;
    let mut boundary = false;
    let mut iterations = 0;
    let mut cov = DMatrix::zeros(p, p);

    for it in 1..=opts.max_iter {
        iterations = it;
        let w = working_weights(family, link, data, &eta, &mu);
        let z = DVector::from_fn(n, |i, _| eta[i] - data.offset[i] + (data.y[i] - mu[i]) / link.dmu_deta(eta[i]));
        let mut candidate = weighted_least_squares(&data.x, &w, &z)?;

        // step halving toward the previous iterate when the deviance is not finite or rises
        let mut halvings = 0;
        let (new_eta, new_mu, new_dev) = loop {
            let e = &data.x * &candidate + &data.offset;
            let m = e.map(|v| link.inverse(v));
            let d = if m.iter().all(|&v| family.mean_in_domain(v)) {
                deviance(family, data, m.as_slice()).unwrap_or(f64::INFINITY)
            } else {
                f64::INFINITY
            };
            let worse = beta.is_some() && d > dev * (1.0 + 1e-12) + 1e-12;
            if d.is_finite() && !worse {
                break (e, m, d);
            }
            match &beta {
                Some(prev) if halvings < 30 => {
                    candidate = (&candidate + prev) * 0.5;
                    halvings += 1;
                }
                _ => {
                    boundary = true;
                    break (eta.clone(), mu.clone(), dev);
                }
            }
        };
        if boundary {
            break;
        }
        let rel_change = (new_dev - dev).abs() / (new_dev.abs() + 0.1);
        eta = new_eta;
        mu = new_mu;
        dev = new_dev;
        beta = Some(candidate);
        let b = beta.as_ref().expect("set above");

        let info = weighted_crossprod(&data.x, &working_weights(family, link, data, &eta, &mu));
        cov = spd_inverse(&info)?;
        let s = score(family, link, b.as_slice(), 1.0, data)?;
        let score_se = (0..p).map(|j| (s[j] * cov[(j, j)].sqrt()).abs()).fold(0.0, f64::max);
        let diverging = guard_applies(family) && b.iter().any(|v| v.abs() > opts.divergence_guard);
        if it > 1 && rel_change < opts.dev_tol && (score_se < opts.score_tol || diverging) {
            converged = true;
            boundary |= diverging;
            break;
        }
    }

    let beta = match beta {
        Some(b) => b,
        None => return Err(domain("IRLS first step left the family domain")),
    };
    boundary |= guard_applies(family)
        && (beta.iter().any(|v| v.abs() > opts.divergence_guard) || mu.iter().any(|&m| mean_underflow(family, m)));

    let mut fit = FitResult {
        family,
        link,
        beta_hat: beta.iter().cloned().collect(),
        cov_unscaled: cov,
        deviance: dev,
        scale: None,
        converged,
        boundary,
        iterations,
        loglik_at_mle: f64::NAN,
        fitted: mu.iter().cloned().collect(),
        n,
        p,
    };
    if n > p && dev > 0.0 {
        fit.scale = Some(scale_estimates(family, data, &fit)?);
    }
    fit.loglik_at_mle = log_likelihood(family, link, &fit.beta_hat, fit.inferential_phi(), data)?;
    if !converged && !boundary {
        return Err(Error::NotConverged(Box::new(fit)));
    }
    Ok(fit)
}

fn guard_applies(family: Family) -> bool {
    matches!(family, Family::Poisson | Family::Binomial)
}

fn mean_underflow(family: Family, mu: f64) -> bool {
    match family {
        Family::Poisson => mu < 1e-8,
        Family::Binomial => !(1e-10..=1.0 - 1e-10).contains(&mu),
        _ => false,
    }
}

fn weighted_least_squares(x: &DMatrix<f64>, w: &DVector<f64>, z: &DVector<f64>) -> Result<DVector<f64>> {
    let sw = w.map(f64::sqrt);
    let mut a = x.clone();
    for mut col in a.column_iter_mut() {
        col.component_mul_assign(&sw);
    }
    let b = z.component_mul(&sw);
    let qr = a.qr();
    let r = qr.r();
    let p = r.ncols();
    let max_diag = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if (0..p).any(|j| r[(j, j)].abs() <= 1e-12 * max_diag) || max_diag == 0.0 {
        return Err(Error::Design("weighted design is rank deficient".into()));
    }
    let qtb = qr.q().transpose() * b;
    r.solve_upper_triangular(&qtb).ok_or_else(|| Error::Design("triangular solve failed".into()))
}
