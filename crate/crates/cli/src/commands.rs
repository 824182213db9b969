use std::io::Write;
use std::path::PathBuf;

use pivalue::decision::{
    evaluate_decision, evpi_pure, evpi_recalibrated, pi_critical, pi_critical_grid, pi_critical_raw, recalibration_loss,
    AnalystParams, ClientParams, Decision, RecalibrationLoss, Utility,
};
use pivalue::glm::{
    likelihood_surface, log_likelihood, quadraticity_diagnostic, Family, FitResult, Link, QuadraticityReport,
    SurfaceGrid,
};
use pivalue::inference::{
    pi_value_analytic, pi_value_from_samples, tail_comparison, SampleMethod, TailComparison, TailMethod,
};
use pivalue::io::{
    bundled_sglt2i, coefficient_rows, emit_plot_csv, emit_result_json, fit_trial, parse_trial_csv, study_outcomes,
    to_json_string, CoefficientRow, Envelope, FitOutput, PlotTable, PosteriorMethod, RunConfig,
    TrialDesign, TrialRecord,
};
use pivalue::numerics::{normal_logpdf, student_t_logpdf};
use pivalue::posterior::{
    grid_posterior, laplace_posterior, pooled_column, run_chains, GridPosterior, ImproprietyReport, MarginalSummary,
};
use pivalue::priors::{local_uniformity_check, prior_logpdf, reference_priors, Interval, PriorSpec, ScalePriorSpec};
use pivalue::replication::{
    ks_distance, predictive_pi, rpd_cdf, rpd_curve, rpd_median, run_replication, InitialAnalysis, ReplicationConfig,
    ReplicationSummary, RpdMoments, TranslationKernel,
};
use pivalue::{Error, Result};
use serde::Serialize;

use crate::{Cli, Command, DataArgs, Failure, Global, MethodArg, UtilityArg};

const COEF_NAMES: [&str; 2] = ["intercept", "treat"];

pub fn run(cli: &Cli) -> std::result::Result<(), Failure> {
    let g = &cli.global;
    let cfg = load_config(g)?;
    match &cli.command {
        Command::Fit { data } => fit(g, &cfg, data),
        Command::Posterior { data, method, bounds } => posterior(g, &cfg, data, *method, bounds),
        Command::Surface { data, half_width, threshold } => surface(g, &cfg, data, *half_width, *threshold),
        Command::Decide { epsilon, epsilon_loss, c, pi, alpha, analyst_capital, utility } => {
            decide(g, &cfg, DecideArgs { epsilon: *epsilon, epsilon_loss: *epsilon_loss, c: *c, pi: *pi, alpha: *alpha, analyst_capital: *analyst_capital, utility: *utility })
        }
        Command::PredictPi { pi } => {
            let out = PredictOutput { pi_init: *pi, predictive_pi: predictive_pi(*pi)? };
            emit(g, "predict-pi", cfg.seed, &out, None)?;
            Ok(())
        }
        Command::Rpd { pi_init, points, cap } => rpd(g, &cfg, *pi_init, *points, *cap),
        Command::Replicate { data } => replicate(g, &cfg, data),
        Command::Priors { lo, hi } => priors(g, &cfg, *lo, *hi),
        Command::Tails { z, dof } => tails(g, &cfg, *z, *dof),
    }
}

fn load_config(g: &Global) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(e) = g.exposure_scale {
        cfg.model.exposure_scale = e;
    }
    if let Some(r) = g.resolution {
        cfg.posterior.resolution = r;
    }
    if let Some(n) = g.n_sim {
        cfg.replication.n_sim = n;
    }
    cfg.replication.allow_boundary |= g.allow_boundary;
    if !g.prior.is_empty() {
        cfg.priors.coefficients = g.prior.iter().map(|s| parse_prior(s)).collect::<Result<_>>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_prior(s: &str) -> Result<PriorSpec> {
    let spec = if s.trim() == "flat" {
        PriorSpec::Flat
    } else {
        serde_json::from_str(s).map_err(|e| Error::Config(format!("--prior `{s}`: {e}")))?
    };
    spec.validate()?;
    Ok(spec)
}

/// JSON envelope to stdout or `--out`, plot table to `--plot` and/or a
/// `.csv` `--out`.
fn emit<T: Serialize>(g: &Global, command: &str, seed: u64, result: &T, plot: Option<&PlotTable>) -> Result<()> {
    let env = Envelope::new(command, seed, result);
    let is_csv = |p: &PathBuf| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let csv_out = g.out.as_ref().filter(|p| is_csv(p));
    match g.out.as_ref().filter(|p| !is_csv(p)) {
        Some(path) => emit_result_json(path, &env)?,
        None => write_stdout(&to_json_string(&env)?)?,
    }
    let targets: Vec<&PathBuf> = csv_out.into_iter().chain(g.plot.as_ref()).collect();
    if !targets.is_empty() {
        let table = plot.ok_or_else(|| Error::Config(format!("`{command}` has no plot output")))?;
        for path in targets {
            emit_plot_csv(path, table)?;
        }
    }
    Ok(())
}

/// A reader that has gone away (`| head`) is not an error.
fn write_stdout(json: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{json}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

fn load_records(cfg: &RunConfig, data: &DataArgs) -> Result<Vec<TrialRecord>> {
    match data.data.as_deref().or(cfg.data.path.as_deref()) {
        Some(p) => parse_trial_csv(p),
        None => Ok(bundled_sglt2i()),
    }
}

fn check_model(cfg: &RunConfig) -> Result<()> {
    if cfg.model.family != Family::Poisson || cfg.model.link() != Link::Log {
        return Err(Error::Config("trial data are modelled as poisson counts with a log link".into()));
    }
    Ok(())
}

fn select(cfg: &RunConfig, data: &DataArgs) -> Result<(String, String)> {
    let study = data.study.clone().or_else(|| cfg.data.study.clone());
    let outcome = data.outcome.clone().or_else(|| cfg.data.outcome.clone());
    match (study, outcome) {
        (Some(s), Some(o)) => Ok((s, o)),
        _ => Err(Error::Config("this command needs --study and --outcome".into())),
    }
}

/// Design and fit for one study/outcome, refusing boundary fits unless allowed.
fn fitted(cfg: &RunConfig, data: &DataArgs) -> std::result::Result<(TrialDesign, FitResult, FitOutput), Failure> {
    check_model(cfg)?;
    let records = load_records(cfg, data)?;
    let (study, outcome) = select(cfg, data)?;
    let (design, fit, out) = fit_trial(&records, &study, &outcome, cfg.model.exposure_scale)?;
    if fit.boundary && !cfg.replication.allow_boundary {
        return Err(Failure::Flagged(format!("{study}/{outcome}: boundary fit (pass --allow-boundary to continue)")));
    }
    Ok((design, fit, out))
}

#[derive(Serialize)]
struct FitReport {
    fits: Vec<FitOutput>,
}

fn fit(g: &Global, cfg: &RunConfig, data: &DataArgs) -> std::result::Result<(), Failure> {
    check_model(cfg)?;
    let records = load_records(cfg, data)?;
    let study = data.study.clone().or_else(|| cfg.data.study.clone());
    let outcome = data.outcome.clone().or_else(|| cfg.data.outcome.clone());
    let pairs: Vec<(String, String)> = study_outcomes(&records)
        .into_iter()
        .filter(|(s, o)| {
            study.as_ref().is_none_or(|x| x.eq_ignore_ascii_case(s)) && outcome.as_ref().is_none_or(|x| x.eq_ignore_ascii_case(o))
        })
        .collect();
    if pairs.is_empty() {
        return Err(Error::Config("no study/outcome matches the selection".into()).into());
    }
    let allow = cfg.replication.allow_boundary;
    let mut fits = Vec::with_capacity(pairs.len());
    let mut flagged = Vec::new();
    for (s, o) in &pairs {
        let (_, _, mut out) = fit_trial(&records, s, o, cfg.model.exposure_scale)?;
        if out.boundary && !allow {
            out.coefficients.clear();
            flagged.push(format!("{s}/{o}"));
        }
        fits.push(out);
    }
    emit(g, "fit", cfg.seed, &FitReport { fits }, None)?;
    if flagged.is_empty() {
        Ok(())
    } else {
        Err(Failure::Flagged(format!("boundary fit for {} (pass --allow-boundary to report it)", flagged.join(", "))))
    }
}

#[derive(Serialize)]
struct PosteriorOutput {
    study: String,
    outcome: String,
    method: PosteriorMethod,
    priors: Vec<PriorSpec>,
    proper: bool,
    coefficients: Vec<CoefficientRow>,
    /// Posterior mean and sd per coefficient; absent when improper.
    summaries: Vec<Option<MarginalSummary>>,
    impropriety: Vec<ImproprietyReport>,
    acceptance_rates: Vec<f64>,
    warnings: Vec<String>,
}

fn parse_bounds(raw: &[String], cfg: &RunConfig) -> Result<Vec<Interval>> {
    if raw.is_empty() {
        return Ok(cfg.posterior.bounds.iter().map(|b| Interval::from(*b)).collect());
    }
    raw.iter()
        .map(|s| {
            let v: Vec<f64> = s
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Config(format!("--bounds `{s}`: {e}"))))
                .collect::<Result<_>>()?;
            match v[..] {
                [lo, hi] if lo < hi => Ok(Interval::new(lo, hi)),
                _ => Err(Error::Config(format!("--bounds `{s}` must be `lo,hi` with lo < hi"))),
            }
        })
        .collect()
}

fn posterior(g: &Global, cfg: &RunConfig, data: &DataArgs, method: Option<MethodArg>, bounds: &[String]) -> std::result::Result<(), Failure> {
    let (design, fit, out) = fitted(cfg, data)?;
    let p = fit.p;
    let priors = if cfg.priors.coefficients.is_empty() { vec![PriorSpec::Flat; p] } else { cfg.priors.coefficients.clone() };
    if priors.len() != p {
        return Err(Error::Config(format!("{} priors given for {p} coefficients", priors.len())).into());
    }
    let method = match method {
        Some(MethodArg::Laplace) => PosteriorMethod::Laplace,
        Some(MethodArg::Grid) => PosteriorMethod::Grid,
        Some(MethodArg::Metropolis) => PosteriorMethod::Metropolis,
        None => cfg.posterior.method,
    };
    let mut rows = out.coefficients.clone();
    let mut summaries = vec![None; p];
    let mut impropriety = Vec::new();
    let mut acceptance_rates = Vec::new();
    let mut warnings = Vec::new();
    let mut proper = true;
    let data = &design.data;
    let loglik = |b: &[f64]| log_likelihood(fit.family, fit.link, b, 1.0, data).unwrap_or(f64::NEG_INFINITY);

    let plot = match method {
        PosteriorMethod::Laplace => {
            if priors.iter().any(|s| *s != PriorSpec::Flat) {
                return Err(Error::Config("the laplace method assumes flat coefficient priors".into()).into());
            }
            let scale_prior = cfg.priors.scale.unwrap_or(ScalePriorSpec::Jeffreys);
            let post = laplace_posterior(&fit, &scale_prior)?.beta_posterior;
            for (j, row) in rows.iter_mut().enumerate() {
                let t = pi_value_analytic(&post, j, 0.0)?;
                row.pi = Some(t.p_or_pi);
                row.method = t.method;
                let (loc, scale, _) = post.marginal(j);
                summaries[j] = Some(MarginalSummary { mean: loc, sd: scale });
            }
            let (loc, scale, dof) = post.marginal(p - 1);
            let mut t = PlotTable::new(&["beta", "density"]);
            for k in 0..401 {
                let b = loc + scale * (-5.0 + 10.0 * k as f64 / 400.0);
                let ld = match dof {
                    Some(d) => student_t_logpdf((b - loc) / scale, d as f64) - scale.ln(),
                    None => normal_logpdf(b, loc, scale),
                };
                t.push(vec![b, ld.exp()]);
            }
            t
        }
        PosteriorMethod::Grid => {
            let mut b = parse_bounds(bounds, cfg)?;
            if b.is_empty() {
                if fit.boundary {
                    return Err(Error::NotApplicable("boundary fit: grid bounds must be given with --bounds".into()).into());
                }
                let hw = cfg.posterior.half_width_se;
                b = (0..p).map(|j| Interval::new(fit.beta_hat[j] - hw * fit.se(j, 1.0), fit.beta_hat[j] + hw * fit.se(j, 1.0))).collect();
            }
            if b.len() != p {
                return Err(Error::Config(format!("{} grid bounds given for {p} coefficients", b.len())).into());
            }
            let grid = grid_posterior(&loglik, &priors, &b, cfg.posterior.resolution)?;
            proper = grid.proper;
            impropriety = grid.impropriety.clone();
            if proper {
                for (j, row) in rows.iter_mut().enumerate() {
                    row.pi = Some(grid.pi_value(j, 0.0)?);
                    row.method = TailMethod::PosteriorGrid;
                    summaries[j] = Some(grid.summary(j)?);
                }
            } else {
                warnings.push("posterior is improper: π-values withheld".into());
            }
            grid_table(&grid)
        }
        PosteriorMethod::Metropolis => {
            let log_post = |b: &[f64]| loglik(b) + b.iter().zip(&priors).map(|(v, s)| prior_logpdf(s, *v)).sum::<f64>();
            let chains = run_chains(
                &log_post,
                &fit.beta_hat,
                &fit.cov(1.0),
                cfg.posterior.n_iter,
                cfg.posterior.burn_in,
                cfg.seed,
                0,
                cfg.posterior.chains,
            )?;
            acceptance_rates = chains.iter().map(|c| c.acceptance_rate).collect();
            for (j, row) in rows.iter_mut().enumerate() {
                let draws = pooled_column(&chains, j);
                let t = pi_value_from_samples(&draws, 0.0, SampleMethod::Mixture)?;
                row.pi = Some(t.p_or_pi);
                row.method = t.method;
                warnings.extend(t.warning);
                let n = draws.len() as f64;
                let mean = draws.iter().sum::<f64>() / n;
                let sd = (draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
                summaries[j] = Some(MarginalSummary { mean, sd });
            }
            let header: Vec<String> =
                ["chain".to_string(), "iteration".to_string()].into_iter().chain((0..p).map(|j| format!("beta{j}"))).collect();
            let mut t = PlotTable { header, rows: Vec::new() };
            for (c, chain) in chains.iter().enumerate() {
                for k in 0..chain.len() {
                    t.push([c as f64, k as f64].into_iter().chain(chain.draw(k).iter().copied()).collect());
                }
            }
            t
        }
    };
    let result = PosteriorOutput {
        study: out.study,
        outcome: out.outcome,
        method,
        priors,
        proper,
        coefficients: rows,
        summaries,
        impropriety,
        acceptance_rates,
        warnings,
    };
    emit(g, "posterior", cfg.seed, &result, Some(&plot))?;
    Ok(())
}

/// Full grid in storage order: one `beta{j}` column per axis, then the log density.
fn grid_table(grid: &GridPosterior) -> PlotTable {
    let p = grid.axes.len();
    let header: Vec<String> = (0..p).map(|j| format!("beta{j}")).chain(["log_density".to_string()]).collect();
    let sizes: Vec<usize> = grid.axes.iter().map(|a| a.len()).collect();
    let mut t = PlotTable { header, rows: Vec::with_capacity(grid.log_density.len()) };
    for (flat, ld) in grid.log_density.iter().enumerate() {
        let mut rest = flat;
        let mut row = vec![0.0; p + 1];
        for d in (0..p).rev() {
            row[d] = grid.axes[d][rest % sizes[d]];
            rest /= sizes[d];
        }
        row[p] = *ld;
        t.push(row);
    }
    t
}

#[derive(Serialize)]
struct SurfaceOutput {
    study: String,
    outcome: String,
    boundary: bool,
    center: [f64; 2],
    information: [[f64; 2]; 2],
    resolution: usize,
    half_width: f64,
    /// Absent for boundary fits.
    quadraticity: Option<QuadraticityReport>,
}

fn surface(g: &Global, cfg: &RunConfig, data: &DataArgs, half_width: f64, threshold: f64) -> std::result::Result<(), Failure> {
    let (design, fit, out) = fitted(cfg, data)?;
    let resolution = g.resolution.unwrap_or(SurfaceGrid::default().resolution);
    let anchor = fit.boundary.then(|| [fit.beta_hat[0], fit.beta_hat[1]]);
    let grid = SurfaceGrid { half_widths: [half_width, half_width], resolution, anchor };
    let s = likelihood_surface(&fit, &design.data, &grid)?;
    let quadraticity = if s.boundary { None } else { Some(quadraticity_diagnostic(&s, threshold)?) };
    let mut t = PlotTable::new(&["beta0", "beta1", "loglik", "loglik_quad"]);
    let m = s.beta1.len();
    for (a, &b0) in s.beta0.iter().enumerate() {
        for (b, &b1) in s.beta1.iter().enumerate() {
            t.push(vec![b0, b1, s.loglik[a * m + b], s.loglik_quad[a * m + b]]);
        }
    }
    let result = SurfaceOutput {
        study: out.study,
        outcome: out.outcome,
        boundary: s.boundary,
        center: s.center,
        information: s.information,
        resolution,
        half_width,
        quadraticity,
    };
    emit(g, "surface", cfg.seed, &result, Some(&t))?;
    Ok(())
}

struct DecideArgs {
    epsilon: Option<f64>,
    epsilon_loss: Option<f64>,
    c: Option<f64>,
    pi: Option<f64>,
    alpha: Option<f64>,
    analyst_capital: Option<f64>,
    utility: Option<UtilityArg>,
}

#[derive(Serialize)]
struct AnalystOutput {
    analyst: AnalystParams,
    recalibration: RecalibrationLoss,
    evpi_pure: Option<f64>,
    evpi_recalibrated: Option<f64>,
}

#[derive(Serialize)]
struct DecideOutput {
    client: ClientParams,
    pi_crit_raw: f64,
    pi_crit: f64,
    pi: Option<f64>,
    decision: Option<Decision>,
    analyst: Option<AnalystOutput>,
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| (lo.ln() + (hi / lo).ln() * k as f64 / (n - 1) as f64).exp()).collect()
}

fn decide(g: &Global, cfg: &RunConfig, a: DecideArgs) -> std::result::Result<(), Failure> {
    let base = cfg.decision.as_ref();
    let pick = |flag: Option<f64>, from_cfg: Option<f64>, name: &str| {
        flag.or(from_cfg).ok_or_else(|| Error::Config(format!("decide needs --{name} or a [decision.client] section")))
    };
    let client = ClientParams {
        epsilon: pick(a.epsilon, base.map(|d| d.client.epsilon), "epsilon")?,
        epsilon_loss: pick(a.epsilon_loss, base.map(|d| d.client.epsilon_loss), "epsilon-loss")?,
        c: pick(a.c, base.map(|d| d.client.c), "c")?,
        capital: base.map_or(1.0, |d| d.client.capital),
    };
    let pi_crit = pi_critical(&client)?;
    let decision = a.pi.map(|pi| evaluate_decision(&client, pi)).transpose()?;
    let analyst = match (a.alpha, base.and_then(|d| d.analyst.clone())) {
        (Some(alpha), cfg_analyst) => Some(AnalystParams {
            capital: a.analyst_capital.or(cfg_analyst.as_ref().map(|x| x.capital)).unwrap_or(1.0),
            alpha,
            utility: match a.utility {
                Some(UtilityArg::Linear) => Utility::Linear,
                Some(UtilityArg::Log) => Utility::Log,
                None => cfg_analyst.map_or(Utility::Log, |x| x.utility),
            },
        }),
        (None, cfg_analyst) => cfg_analyst,
    };
    let analyst = analyst
        .map(|an| -> Result<AnalystOutput> {
            Ok(AnalystOutput {
                recalibration: recalibration_loss(&an, pi_crit)?,
                evpi_pure: a.pi.map(|pi| evpi_pure(&an, pi)).transpose()?,
                evpi_recalibrated: a.pi.map(|pi| evpi_recalibrated(&an, pi, pi_crit)).transpose()?,
                analyst: an,
            })
        })
        .transpose()?;
    let needs_plot = g.plot.is_some() || g.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "csv"));
    let table = if needs_plot {
        let eps = logspace(1e-3, 1.0, 31);
        let loss: Vec<f64> = (1..=19).map(|k| 0.05 * k as f64).collect();
        let cs = logspace(1e-4, 0.5, 25);
        let mut t = PlotTable::new(&["epsilon", "epsilon_loss", "c", "pi_crit"]);
        for pt in pi_critical_grid(&eps, &loss, &cs)? {
            t.push(vec![pt.epsilon, pt.epsilon_loss, pt.c, pt.pi_crit]);
        }
        Some(t)
    } else {
        None
    };
    let result = DecideOutput { client, pi_crit_raw: pi_critical_raw(&client), pi_crit, pi: a.pi, decision, analyst };
    emit(g, "decide", cfg.seed, &result, table.as_ref())?;
    Ok(())
}

#[derive(Serialize)]
struct PredictOutput {
    pi_init: f64,
    predictive_pi: f64,
}

#[derive(Serialize)]
struct RpdOutput {
    pi_init: f64,
    predictive_pi: f64,
    cap: f64,
    points: usize,
    median: f64,
    tail_mass: f64,
    /// Trapezoid integral of the tabulated pdf plus the tail mass.
    total_mass: f64,
    moments: RpdMoments,
}

fn rpd(g: &Global, cfg: &RunConfig, pi_init: f64, points: usize, cap: f64) -> std::result::Result<(), Failure> {
    let curve = rpd_curve(pi_init, cap, points)?;
    let mut t = PlotTable::new(&["x", "pdf", "cdf"]);
    for k in 0..curve.x.len() {
        t.push(vec![curve.x[k], curve.pdf[k], curve.cdf[k]]);
    }
    let result = RpdOutput {
        pi_init,
        predictive_pi: predictive_pi(pi_init)?,
        cap,
        points,
        median: rpd_median(pi_init)?,
        tail_mass: curve.tail_mass,
        total_mass: curve.total_mass(),
        moments: curve.moments,
    };
    emit(g, "rpd", cfg.seed, &result, Some(&t))?;
    Ok(())
}

#[derive(Serialize)]
struct ReplicateOutput {
    study: String,
    outcome: String,
    n_sim: usize,
    test_index: usize,
    /// Wald p-value of the initial fit for the tested coefficient.
    p_init: f64,
    /// KS distance between replicate −log10 p and the closed-form RPD at p_init.
    ks_rpd: f64,
    analyses: Vec<String>,
    summary: ReplicationSummary,
}

fn replicate(g: &Global, cfg: &RunConfig, data: &DataArgs) -> std::result::Result<(), Failure> {
    let (design, fit, out) = fitted(cfg, data)?;
    let sec = &cfg.replication;
    let test_index = sec.test_index.unwrap_or(fit.p - 1);
    if test_index >= fit.p {
        return Err(Error::Config(format!("test_index {test_index} out of range for {} coefficients", fit.p)).into());
    }
    let mut rc = ReplicationConfig::new(sec.n_sim, cfg.seed, test_index);
    rc.analyses = sec.analyses.clone();
    rc.kernel = sec.kernel.clone().unwrap_or_else(TranslationKernel::exact);
    rc.min_events_guard = sec.min_events_guard;
    rc.allow_boundary = sec.allow_boundary;
    rc.scale_dof = sec.scale_dof;
    rc.grid_resolution = sec.grid_resolution;
    let report = run_replication(&InitialAnalysis::Fit(fit.clone()), fit.family, fit.link, &design.data, &rc)?;
    let p_init = coefficient_rows(&fit, &COEF_NAMES)?[test_index].p;
    let ks_rpd = ks_distance(&report.neg_log10_p(), |x| rpd_cdf(x, p_init).unwrap_or(f64::NAN));

    let bayes: Vec<String> = rc.analyses.iter().filter(|a| !matches!(a, pivalue::replication::Analysis::Ml)).map(|a| a.label()).collect();
    let header: Vec<String> = ["index", "beta_generating", "ml_estimate", "ml_p", "neg_log10_p", "failed"]
        .iter()
        .map(|s| s.to_string())
        .chain((0..bayes.len()).map(|k| format!("pi_{k}")))
        .collect();
    let mut t = PlotTable { header, rows: Vec::with_capacity(report.records.len()) };
    for r in &report.records {
        let est = r.ml_estimates.as_ref().map_or(f64::NAN, |b| b[test_index]);
        let p = r.ml_p.unwrap_or(f64::NAN);
        let mut row = vec![r.index as f64, r.beta_generating[test_index], est, p, -p.log10(), r.failed as u8 as f64];
        row.extend(bayes.iter().map(|l| r.bayes.iter().find(|b| &b.analysis == l).map_or(f64::NAN, |b| b.pi)));
        t.push(row);
    }
    let result = ReplicateOutput {
        study: out.study,
        outcome: out.outcome,
        n_sim: report.n_sim,
        test_index,
        p_init,
        ks_rpd,
        analyses: rc.analyses.iter().map(|a| a.label()).collect(),
        summary: report.summary,
    };
    emit(g, "replicate", cfg.seed, &result, Some(&t))?;
    Ok(())
}

#[derive(Serialize)]
struct PriorRow {
    prior: PriorSpec,
    /// (max − min)/max of the density over the interval.
    deviation: f64,
}

#[derive(Serialize)]
struct PriorsOutput {
    interval: Interval,
    resolution: usize,
    priors: Vec<PriorRow>,
}

fn priors(g: &Global, cfg: &RunConfig, lo: f64, hi: f64) -> std::result::Result<(), Failure> {
    if !(lo < hi) {
        return Err(Error::Config(format!("--lo {lo} must be below --hi {hi}")).into());
    }
    let specs = if cfg.priors.coefficients.is_empty() { reference_priors() } else { cfg.priors.coefficients.clone() };
    let resolution = g.resolution.unwrap_or(1001);
    let interval = Interval::new(lo, hi);
    let rows = specs
        .iter()
        .map(|s| Ok(PriorRow { prior: s.clone(), deviation: local_uniformity_check(s, interval, resolution)? }))
        .collect::<Result<Vec<_>>>()?;
    let header: Vec<String> = ["beta".to_string()].into_iter().chain((0..specs.len()).map(|k| format!("density_{k}"))).collect();
    let mut t = PlotTable { header, rows: Vec::with_capacity(resolution) };
    for i in 0..resolution {
        let x = lo + (hi - lo) * i as f64 / (resolution - 1).max(1) as f64;
        t.push(std::iter::once(x).chain(specs.iter().map(|s| prior_logpdf(s, x).exp())).collect());
    }
    emit(g, "priors", cfg.seed, &PriorsOutput { interval, resolution, priors: rows }, Some(&t))?;
    Ok(())
}

#[derive(Serialize)]
struct TailsOutput {
    z: f64,
    dof: u64,
    tails: TailComparison,
}

fn tails(g: &Global, cfg: &RunConfig, z: f64, dof: u64) -> std::result::Result<(), Failure> {
    let tails = tail_comparison(z, dof)?;
    let mut t = PlotTable::new(&["z", "p_normal", "p_t_jeffreys", "p_t_uniform"]);
    for k in 0..=400 {
        let zz = 0.01 * k as f64;
        let c = tail_comparison(zz, dof)?;
        t.push(vec![zz, c.p_normal, c.p_t_jeffreys, c.p_t_uniform]);
    }
    emit(g, "tails", cfg.seed, &TailsOutput { z, dof, tails }, Some(&t))?;
    Ok(())
}
