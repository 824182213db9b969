use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Binomial, ChiSquared, Distribution, Gamma, Normal, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{fit_irls, log_likelihood, Family, FitResult, IrlsOptions, Link, ModelData};
use crate::inference::{pi_value_from_samples, wald_pvalue, SampleMethod, WaldDist};
use crate::numerics::RngStream;
use crate::posterior::{grid_posterior, pooled_column, run_chains, GridPosterior};
use crate::priors::{prior_logpdf, Interval, PriorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Exact,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleKernel {
    Exact,
    /// φ_g = φ_init·exp(sd·Z).
    Lognormal { sd: f64 },
}

/// Map from the initial-study parameters to the generating ones.
///
/// The gaussian kind sets β_g = β̂ + bias + inflation ⊙ (β_init − β̂), so
/// inflation stretches the initial posterior spread coordinate-wise and
/// bias shifts its centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslationKernel {
    pub kind: KernelKind,
    #[serde(default)]
    pub bias: Vec<f64>,
    #[serde(default)]
    pub inflation: Vec<f64>,
    #[serde(default = "exact_scale")]
    pub scale_kind: ScaleKernel,
}

fn exact_scale() -> ScaleKernel {
    ScaleKernel::Exact
}

impl TranslationKernel {
    pub fn exact() -> Self {
        Self { kind: KernelKind::Exact, bias: vec![], inflation: vec![], scale_kind: ScaleKernel::Exact }
    }

    fn validate(&self, p: usize) -> Result<()> {
        if self.kind == KernelKind::Gaussian {
            if self.bias.len() != p || self.inflation.len() != p {
                return Err(Error::Config(format!("gaussian kernel needs bias and inflation of length {p}")));
            }
            if self.inflation.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::Config("kernel inflation must be positive".into()));
            }
        }
        if let ScaleKernel::Lognormal { sd } = self.scale_kind {
            if !(sd >= 0.0) {
                return Err(Error::Config("lognormal scale kernel sd must be non-negative".into()));
            }
        }
        Ok(())
    }

    fn apply(&self, beta_init: &[f64], centre: &[f64], phi_init: f64, rng: &mut RngStream) -> (Vec<f64>, f64) {
        let beta = match self.kind {
            KernelKind::Exact => beta_init.to_vec(),
            KernelKind::Gaussian => (0..beta_init.len())
                .map(|j| centre[j] + self.bias[j] + self.inflation[j] * (beta_init[j] - centre[j]))
                .collect(),
        };
        let phi = match self.scale_kind {
            ScaleKernel::Exact => phi_init,
            ScaleKernel::Lognormal { sd } => phi_init * (sd * rng.sample::<f64, _>(StandardNormal)).exp(),
        };
        (beta, phi)
    }
}

/// Analysis run on every replicate dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Analysis {
    Ml,
    BayesFlat,
    /// Cauchy intercept, Student-t on every other coefficient.
    BayesStudentT { df: f64, scale: f64 },
}

impl Analysis {
    pub fn label(&self) -> String {
        match self {
            Analysis::Ml => "ml".into(),
            Analysis::BayesFlat => "bayes_flat".into(),
            Analysis::BayesStudentT { df, scale } => format!("bayes_student_t(df={df},scale={scale})"),
        }
    }

    fn priors(&self, p: usize) -> Vec<PriorSpec> {
        match self {
            Analysis::Ml | Analysis::BayesFlat => vec![PriorSpec::Flat; p],
            Analysis::BayesStudentT { df, scale } => (0..p)
                .map(|j| if j == 0 { PriorSpec::cauchy(0.0, 1.0) } else { PriorSpec::student_t(0.0, *df, *scale) })
                .collect(),
        }
    }
}

/// Harness settings.
#[derive(Debug, Clone)]
pub struct ReplicationConfig {
    pub n_sim: usize,
    /// Replicate design; `None` reuses the initial design.
    pub replicate_design: Option<ModelData>,
    pub analyses: Vec<Analysis>,
    pub kernel: TranslationKernel,
    pub seed: u64,
    /// Minimum events per level of the tested covariate (count families).
    pub min_events_guard: usize,
    /// Coefficient whose p/π-value is recorded.
    pub test_index: usize,
    /// Keep boundary ML fits instead of flagging them as failures.
    pub allow_boundary: bool,
    /// Degrees of freedom of the scale draw; `None` uses n − p.
    pub scale_dof: Option<usize>,
    /// Grid resolution for two-coefficient Bayesian replicates.
    pub grid_resolution: usize,
    /// Chains and retained draws per chain otherwise.
    pub chains: usize,
    pub chain_draws: usize,
}

impl ReplicationConfig {
    pub fn new(n_sim: usize, seed: u64, test_index: usize) -> Self {
        Self {
            n_sim,
            replicate_design: None,
            analyses: vec![Analysis::Ml],
            kernel: TranslationKernel::exact(),
            seed,
            min_events_guard: 1,
            test_index,
            allow_boundary: false,
            scale_dof: None,
            grid_resolution: 201,
            chains: 4,
            chain_draws: 2000,
        }
    }
}

/// Source of initial-study parameter draws.
#[derive(Debug, Clone)]
pub enum InitialAnalysis {
    /// Normal × scaled-inverse-χ² around the ML fit.
    Fit(FitResult),
    /// Draws from a tabulated posterior; the scale is fixed at 1.
    Grid(GridPosterior),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesRecord {
    pub analysis: String,
    /// One posterior draw of the full coefficient vector.
    pub draw: Vec<f64>,
    pub pi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub index: usize,
    pub beta_generating: Vec<f64>,
    pub phi_generating: f64,
    pub ml_estimates: Option<Vec<f64>>,
    pub ml_se: Option<f64>,
    pub ml_p: Option<f64>,
    pub ml_boundary: bool,
    pub bayes: Vec<BayesRecord>,
    pub failed: bool,
    pub failure_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesSummary {
    pub analysis: String,
    pub draw_mean: f64,
    pub draw_sd: f64,
    pub fraction_pi_below_005: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub n_used: usize,
    pub fraction_failed: f64,
    pub ml_mean: f64,
    pub ml_sd: f64,
    /// Monte Carlo standard error of `ml_mean`.
    pub ml_mc_se: f64,
    /// 5%, 25%, 50%, 75%, 95% quantiles of −log10 p.
    pub neg_log10_p_quantiles: [f64; 5],
    pub fraction_p_below_005: f64,
    pub bayes: Vec<BayesSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub seed: u64,
    pub n_sim: usize,
    pub test_index: usize,
    pub records: Vec<ReplicateRecord>,
    pub summary: ReplicationSummary,
}

impl ReplicationReport {
    /// −log10 p of every usable replicate, in replicate order.
    pub fn neg_log10_p(&self) -> Vec<f64> {
        self.records.iter().filter(|r| !r.failed).filter_map(|r| r.ml_p).map(|p| -p.log10()).collect()
    }

    /// Tested-coefficient ML estimates of every usable replicate.
    pub fn ml_test_estimates(&self) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| !r.failed)
            .filter_map(|r| r.ml_estimates.as_ref().map(|b| b[self.test_index]))
            .collect()
    }
}

/// Draw y from the family at means `mu`.
pub fn simulate_response(family: Family, mu: &[f64], phi: f64, weights: &DVector<f64>, rng: &mut RngStream) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::Harness(format!("cannot simulate {what}"));
    mu.iter()
        .zip(weights.iter())
        .map(|(&m, &a)| {
            Ok(match family {
                Family::Gaussian => Normal::new(m, (phi / a).sqrt()).map_err(|_| bad("gaussian"))?.sample(rng),
                Family::Poisson => {
                    if m <= 0.0 {
                        0.0
                    } else {
                        Poisson::new(m).map_err(|_| bad("poisson"))?.sample(rng)
                    }
                }
                Family::Binomial => {
                    let trials = a.round() as u64;
                    let k = Binomial::new(trials, m.clamp(0.0, 1.0)).map_err(|_| bad("binomial"))?.sample(rng);
                    k as f64 / a
                }
                Family::Gamma => {
                    let shape = a / phi;
                    Gamma::new(shape, m / shape).map_err(|_| bad("gamma"))?.sample(rng)
                }
            })
        })
        .collect()
}

fn events_guard(family: Family, data: &ModelData, test_index: usize, min_events: usize) -> Option<String> {
    if !matches!(family, Family::Poisson | Family::Binomial) || min_events == 0 {
        return None;
    }
    let mut levels: Vec<(f64, f64)> = Vec::new();
    for i in 0..data.n() {
        let level = data.x[(i, test_index)];
        let events = data.y[i] * if family == Family::Binomial { data.weights[i] } else { 1.0 };
        match levels.iter_mut().find(|(l, _)| *l == level) {
            Some((_, e)) => *e += events,
            None => levels.push((level, events)),
        }
    }
    levels
        .iter()
        .find(|(_, e)| *e < min_events as f64)
        .map(|(l, e)| format!("{e} events at covariate level {l}, fewer than {min_events}"))
}

struct Setup<'a> {
    family: Family,
    link: Link,
    design: &'a ModelData,
    config: &'a ReplicationConfig,
    centre: Vec<f64>,
}

fn draw_initial(initial: &InitialAnalysis, config: &ReplicationConfig, rng: &mut RngStream) -> Result<(Vec<f64>, f64)> {
    match initial {
        InitialAnalysis::Fit(fit) => {
            let phi = if fit.family.known_scale() {
                1.0
            } else {
                let dof = config.scale_dof.unwrap_or(fit.n - fit.p);
                if dof == 0 {
                    return Err(Error::DegreesOfFreedom("scale draw with zero degrees of freedom".into()));
                }
                let s2 = fit.deviance / (fit.n - fit.p) as f64;
                let chi: f64 = ChiSquared::new(dof as f64).map_err(|e| Error::Harness(e.to_string()))?.sample(rng);
                dof as f64 * s2 / chi
            };
            let chol = fit
                .cov(phi)
                .cholesky()
                .ok_or_else(|| Error::Harness("initial covariance not positive definite".into()))?;
            let z = DVector::from_iterator(fit.p, (0..fit.p).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let step = chol.l() * z;
            Ok(((0..fit.p).map(|j| fit.beta_hat[j] + step[j]).collect(), phi))
        }
        InitialAnalysis::Grid(g) => Ok((g.sample(rng)?, 1.0)),
    }
}

fn one_replicate(index: usize, initial: &InitialAnalysis, s: &Setup) -> ReplicateRecord {
    let mut rng = RngStream::new(s.config.seed, index as u64);
    let mut rec = ReplicateRecord {
        index,
        beta_generating: vec![],
        phi_generating: f64::NAN,
        ml_estimates: None,
        ml_se: None,
        ml_p: None,
        ml_boundary: false,
        bayes: vec![],
        failed: false,
        failure_reason: None,
    };
    let fail = |mut rec: ReplicateRecord, why: String| {
        rec.failed = true;
        rec.failure_reason = Some(why);
        rec
    };
    let (beta_init, phi_init) = match draw_initial(initial, s.config, &mut rng) {
        Ok(v) => v,
        Err(e) => return fail(rec, e.to_string()),
    };
    let (beta_g, phi_g) = s.config.kernel.apply(&beta_init, &s.centre, phi_init, &mut rng);
    rec.beta_generating = beta_g.clone();
    rec.phi_generating = phi_g;
    let eta = &s.design.x * DVector::from_column_slice(&beta_g) + &s.design.offset;
    let mu: Vec<f64> = eta.iter().map(|&e| s.link.inverse(e)).collect();
    let y = match simulate_response(s.family, &mu, phi_g, &s.design.weights, &mut rng) {
        Ok(y) => y,
        Err(e) => return fail(rec, e.to_string()),
    };
    let data = s.design.with_response(y);
    if let Some(why) = events_guard(s.family, &data, s.config.test_index, s.config.min_events_guard) {
        return fail(rec, why);
    }
    let ml = match fit_irls(s.family, s.link, &data, IrlsOptions::default()) {
        Ok(f) => Some(f),
        Err(e) => return fail(rec, e.to_string()),
    };
    if let Some(fit) = &ml {
        rec.ml_boundary = fit.boundary;
        if fit.boundary && !s.config.allow_boundary {
            return fail(rec, "boundary fit".into());
        }
        let phi = fit.inferential_phi();
        match wald_pvalue(fit, phi, s.config.test_index, 0.0, WaldDist::Normal, None) {
            Ok(t) => {
                rec.ml_p = Some(t.p_or_pi);
                rec.ml_se = Some(fit.se(s.config.test_index, phi));
                rec.ml_estimates = Some(fit.beta_hat.clone());
            }
            Err(e) => return fail(rec, e.to_string()),
        }
    }
    for analysis in s.config.analyses.iter().filter(|a| !matches!(a, Analysis::Ml)) {
        match bayes_replicate(analysis, &data, ml.as_ref(), s, &mut rng) {
            Ok(b) => rec.bayes.push(b),
            Err(e) => return fail(rec, format!("{}: {e}", analysis.label())),
        }
    }
    rec
}

fn bayes_replicate(analysis: &Analysis, data: &ModelData, ml: Option<&FitResult>, s: &Setup, rng: &mut RngStream) -> Result<BayesRecord> {
    let p = data.p();
    let priors = analysis.priors(p);
    let fit = ml.filter(|f| !f.boundary).ok_or_else(|| Error::NotApplicable("no interior ML fit to centre the posterior".into()))?;
    let phi = fit.inferential_phi();
    let ll = |b: &[f64]| log_likelihood(s.family, s.link, b, phi, data).unwrap_or(f64::NEG_INFINITY);
    let j = s.config.test_index;
    if p == 2 {
        let bounds: Vec<Interval> =
            (0..p).map(|k| Interval::new(fit.beta_hat[k] - 8.0 * fit.se(k, phi), fit.beta_hat[k] + 8.0 * fit.se(k, phi))).collect();
        let g = grid_posterior(&ll, &priors, &bounds, s.config.grid_resolution)?;
        let draw = g.sample(rng)?;
        let pi = g.pi_value(j, 0.0)?;
        Ok(BayesRecord { analysis: analysis.label(), draw, pi })
    } else {
        let log_post = |b: &[f64]| ll(b) + priors.iter().zip(b).map(|(pr, v)| prior_logpdf(pr, *v)).sum::<f64>();
        let chains = run_chains(
            &log_post,
            &fit.beta_hat,
            &fit.cov(phi),
            s.config.chain_draws,
            s.config.chain_draws,
            rng.random(),
            0,
            s.config.chains,
        )?;
        let col = pooled_column(&chains, j);
        let pick = rng.random_range(0..col.len());
        let per_chain = chains[0].len();
        let draw = chains[pick / per_chain].draw(pick % per_chain).to_vec();
        let pi = pi_value_from_samples(&col, 0.0, SampleMethod::Mixture)?.p_or_pi;
        Ok(BayesRecord { analysis: analysis.label(), draw, pi })
    }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, var.sqrt())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Hierarchical replication: initial-posterior draw, translation to the
/// generating parameters, simulated replicate data, then every analysis.
///
/// Replicate `i` uses random stream `i` of `config.seed`, so the report
/// does not depend on thread scheduling.
pub fn run_replication(initial: &InitialAnalysis, family: Family, link: Link, design: &ModelData, config: &ReplicationConfig) -> Result<ReplicationReport> {
    if config.n_sim < 100 {
        return Err(Error::Config(format!("n_sim = {} below the minimum of 100", config.n_sim)));
    }
    if config.analyses.is_empty() {
        return Err(Error::Config("no analyses configured".into()));
    }
    let rep_design = config.replicate_design.as_ref().unwrap_or(design);
    let p = rep_design.p();
    if config.test_index >= p {
        return Err(Error::Dimension(format!("test index {} of {p}", config.test_index)));
    }
    config.kernel.validate(p)?;
    let centre = match initial {
        InitialAnalysis::Fit(f) => {
            if f.p != p {
                return Err(Error::Dimension(format!("initial fit has {} coefficients, replicate design {p}", f.p)));
            }
            f.beta_hat.clone()
        }
        InitialAnalysis::Grid(g) => (0..p).map(|k| g.summary(k).map(|s| s.mean)).collect::<Result<_>>()?,
    };
    let setup = Setup { family, link, design: rep_design, config, centre };
    let records: Vec<ReplicateRecord> = (0..config.n_sim).into_par_iter().map(|i| one_replicate(i, initial, &setup)).collect();
    let used: Vec<&ReplicateRecord> = records.iter().filter(|r| !r.failed).collect();
    if used.is_empty() {
        let why = records.first().and_then(|r| r.failure_reason.clone()).unwrap_or_default();
        return Err(Error::Harness(format!("all {} replicates failed (first: {why})", config.n_sim)));
    }
    let est: Vec<f64> = used.iter().filter_map(|r| r.ml_estimates.as_ref().map(|b| b[config.test_index])).collect();
    let (ml_mean, ml_sd) = mean_sd(&est);
    let mut nl: Vec<f64> = used.iter().filter_map(|r| r.ml_p).map(|p| -p.log10()).collect();
    nl.sort_by(|a, b| a.total_cmp(b));
    let below = used.iter().filter(|r| r.ml_p.is_some_and(|p| p < 0.05)).count() as f64 / used.len() as f64;
    let bayes = config
        .analyses
        .iter()
        .filter(|a| !matches!(a, Analysis::Ml))
        .map(|a| {
            let label = a.label();
            let rows: Vec<&BayesRecord> = used.iter().flat_map(|r| r.bayes.iter().filter(|b| b.analysis == label)).collect();
            let draws: Vec<f64> = rows.iter().map(|b| b.draw[config.test_index]).collect();
            let (draw_mean, draw_sd) = mean_sd(&draws);
            BayesSummary {
                analysis: label,
                draw_mean,
                draw_sd,
                fraction_pi_below_005: rows.iter().filter(|b| b.pi < 0.05).count() as f64 / rows.len().max(1) as f64,
                count: rows.len(),
            }
        })
        .collect();
    let summary = ReplicationSummary {
        n_used: used.len(),
        fraction_failed: 1.0 - used.len() as f64 / config.n_sim as f64,
        ml_mean,
        ml_sd,
        ml_mc_se: ml_sd / (est.len() as f64).sqrt(),
        neg_log10_p_quantiles: [0.05, 0.25, 0.5, 0.75, 0.95].map(|q| quantile(&nl, q)),
        fraction_p_below_005: below,
        bayes,
    };
    Ok(ReplicationReport { seed: config.seed, n_sim: config.n_sim, test_index: config.test_index, records, summary })
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
