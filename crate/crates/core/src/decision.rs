//! Client threshold, analyst EVPI and expected-utility decisions.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Client facing an act/sleep choice with log utility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientParams {
    /// Fractional gain when acting on a correct statement, > 0.
    pub epsilon: f64,
    /// Fractional loss when acting on a wrong statement, in (0, 1).
    pub epsilon_loss: f64,
    /// Opportunity cost of sleeping, in (0, 1).
    pub c: f64,
    #[serde(default = "one")]
    pub capital: f64,
}

fn one() -> f64 {
    1.0
}

impl ClientParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) || !unit(self.epsilon_loss) || !unit(self.c) || !(self.capital > 0.0) {
            return Err(domain(format!("client parameters out of range: {self:?}")));
        }
        Ok(())
    }
}

/// Analyst utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Utility {
    Linear,
    Log,
    /// (x, U(x)) pairs, x strictly increasing, U non-decreasing;
    /// interpolated by a monotone cubic.
    Tabulated { x: Vec<f64>, u: Vec<f64> },
}

impl Utility {
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            Utility::Linear => Ok(x),
            Utility::Log => {
                if x > 0.0 {
                    Ok(x.ln())
                } else {
                    Err(domain(format!("log utility undefined at {x}")))
                }
            }
            Utility::Tabulated { x: xs, u } => monotone_cubic(xs, u, x),
        }
    }
}

/// Fritsch–Carlson monotone cubic Hermite interpolation.
fn monotone_cubic(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(domain("tabulated utility needs at least two matching (x, U) pairs"));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) || ys.windows(2).any(|w| w[1] < w[0]) {
        return Err(domain("tabulated utility must have increasing x and non-decreasing U"));
    }
    if x < xs[0] || x > xs[n - 1] {
        return Err(domain(format!("{x} outside the tabulated range [{}, {}]", xs[0], xs[n - 1])));
    }
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for k in 1..n - 1 {
        m[k] = if delta[k - 1] * delta[k] <= 0.0 { 0.0 } else { 0.5 * (delta[k - 1] + delta[k]) };
    }
    for k in 0..n - 1 {
        if delta[k] == 0.0 {
            m[k] = 0.0;
            m[k + 1] = 0.0;
            continue;
        }
        let a = m[k] / delta[k];
        let b = m[k + 1] / delta[k];
        let s = a * a + b * b;
        if s > 9.0 {
            let t = 3.0 / s.sqrt();
            m[k] = t * a * delta[k];
            m[k + 1] = t * b * delta[k];
        }
    }
    let k = match xs.iter().position(|&v| v > x) {
        Some(0) => 0,
        Some(j) => j - 1,
        None => n - 2,
    };
    let t = (x - xs[k]) / h[k];
    let (t2, t3) = (t * t, t * t * t);
    Ok((2.0 * t3 - 3.0 * t2 + 1.0) * ys[k]
        + (t3 - 2.0 * t2 + t) * h[k] * m[k]
        + (-2.0 * t3 + 3.0 * t2) * ys[k + 1]
        + (t3 - t2) * h[k] * m[k + 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalystParams {
    pub capital: f64,
    pub alpha: f64,
    pub utility: Utility,
}

impl AnalystParams {
    /// U(C+α) − U(C−α).
    fn central_difference(&self) -> Result<f64> {
        if !(self.alpha > 0.0) {
            return Err(domain(format!("analyst gain must be positive, got {}", self.alpha)));
        }
        Ok(self.utility.eval(self.capital + self.alpha)? - self.utility.eval(self.capital - self.alpha)?)
    }
}

fn check_pi(pi: f64) -> Result<()> {
    if pi > 0.0 && pi <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("π = {pi} not in (0, 1]")))
    }
}

/// Unclamped threshold ratio 2·[ln(1+ε) − ln(1−c)] / [ln(1+ε) − ln(1−c) − ln(1−ε′)].
pub fn pi_critical_raw(client: &ClientParams) -> f64 {
    let gain = client.epsilon.ln_1p() - (-client.c).ln_1p();
    2.0 * gain / (gain - (-client.epsilon_loss).ln_1p())
}

/// Largest π at which a log-utility client still acts; capital cancels.
pub fn pi_critical(client: &ClientParams) -> Result<f64> {
    client.validate()?;
    Ok(pi_critical_raw(client).min(1.0))
}

/// CDQ·α·π = [U(C+α) − U(C−α)]/2 · π.
pub fn evpi_pure(analyst: &AnalystParams, pi: f64) -> Result<f64> {
    check_pi(pi)?;
    Ok(0.5 * analyst.central_difference()? * pi)
}

/// EVPI of an analyst who reports min(π, π_crit).
pub fn evpi_recalibrated(analyst: &AnalystParams, pi: f64, pi_crit: f64) -> Result<f64> {
    check_pi(pi)?;
    check_pi(pi_crit)?;
    Ok(0.5 * analyst.central_difference()? * pi.min(pi_crit))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecalibrationLoss {
    /// f = [δ₂α U(C) / 2U(C+α)]·π_crit.
    pub fraction: f64,
    /// 1 − f.
    pub factor: f64,
}

pub fn recalibration_loss(analyst: &AnalystParams, pi_crit: f64) -> Result<RecalibrationLoss> {
    check_pi(pi_crit)?;
    let top = analyst.utility.eval(analyst.capital + analyst.alpha)?;
    if !(top > 0.0) {
        return Err(domain(format!("U(C+α) = {top} must be positive")));
    }
    let fraction = analyst.central_difference()? / (2.0 * top) * pi_crit;
    Ok(RecalibrationLoss { fraction, factor: 1.0 - fraction })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Act,
    Sleep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub action: Action,
    pub utility_act: f64,
    pub utility_sleep: f64,
}

/// Expected log utilities of acting and sleeping; ties go to sleep.
pub fn evaluate_decision(client: &ClientParams, pi: f64) -> Result<Decision> {
    client.validate()?;
    check_pi(pi)?;
    let m = client.capital.ln();
    let (right, wrong) = (1.0 - 0.5 * pi, 0.5 * pi);
    let utility_act = right * (m + client.epsilon.ln_1p()) + wrong * (m + (-client.epsilon_loss).ln_1p());
    let utility_sleep = right * (m + (-client.c).ln_1p()) + wrong * m;
    let action = if utility_act > utility_sleep { Action::Act } else { Action::Sleep };
    Ok(Decision { action, utility_act, utility_sleep })
}

/// One row of a threshold table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub epsilon: f64,
    pub epsilon_loss: f64,
    pub c: f64,
    pub pi_crit: f64,
}

/// π_crit over the Cartesian product of the given values, ε outermost.
pub fn pi_critical_grid(epsilon: &[f64], epsilon_loss: &[f64], c: &[f64]) -> Result<Vec<ThresholdPoint>> {
    if epsilon.is_empty() || epsilon_loss.is_empty() || c.is_empty() {
        return Err(Error::Config("threshold grid needs at least one value per axis".into()));
    }
    let mut out = Vec::with_capacity(epsilon.len() * epsilon_loss.len() * c.len());
    for &e in epsilon {
        for &l in epsilon_loss {
            for &cc in c {
                let client = ClientParams { epsilon: e, epsilon_loss: l, c: cc, capital: 1.0 };
                out.push(ThresholdPoint { epsilon: e, epsilon_loss: l, c: cc, pi_crit: pi_critical(&client)? });
            }
        }
    }
    Ok(out)
}
