use serde::{Deserialize, Serialize};

use crate::numerics::lgamma;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Exponential-dispersion family of the response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Poisson,
    /// Response is the success proportion; prior weights carry the trial counts.
    Binomial,
    Gamma,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Poisson => "poisson",
            Family::Binomial => "binomial",
            Family::Gamma => "gamma",
        }
    }

    /// Scale fixed at 1 (poisson, binomial).
    pub fn known_scale(self) -> bool {
        matches!(self, Family::Poisson | Family::Binomial)
    }

    pub fn canonical_link(self) -> Link {
        match self {
            Family::Gaussian => Link::Identity,
            Family::Poisson => Link::Log,
            Family::Binomial => Link::Logit,
            // the canonical inverse link is not offered; log is the working default
            Family::Gamma => Link::Log,
        }
    }

    /// V(μ).
    pub fn variance(self, mu: f64) -> f64 {
        match self {
            Family::Gaussian => 1.0,
            Family::Poisson => mu,
            Family::Binomial => mu * (1.0 - mu),
            Family::Gamma => mu * mu,
        }
    }

    /// Canonical parameter θ(μ) = (b′)⁻¹(μ).
    pub fn theta(self, mu: f64) -> f64 {
        match self {
            Family::Gaussian => mu,
            Family::Poisson => mu.ln(),
            Family::Binomial => (mu / (1.0 - mu)).ln(),
            Family::Gamma => -1.0 / mu,
        }
    }

    /// Cumulant function b(θ).
    pub fn cumulant(self, theta: f64) -> f64 {
        match self {
            Family::Gaussian => 0.5 * theta * theta,
            Family::Poisson => theta.exp(),
            Family::Binomial => {
                if theta > 0.0 {
                    theta + (-theta).exp().ln_1p()
                } else {
                    theta.exp().ln_1p()
                }
            }
            Family::Gamma => -(-theta).ln(),
        }
    }

    pub fn mean_in_domain(self, mu: f64) -> bool {
        match self {
            Family::Gaussian => mu.is_finite(),
            Family::Poisson | Family::Gamma => mu > 0.0 && mu.is_finite(),
            Family::Binomial => mu > 0.0 && mu < 1.0,
        }
    }

    /// Unit deviance d(y, μ) for a single observation with unit weight.
    pub fn unit_deviance(self, y: f64, mu: f64) -> f64 {
        let d = match self {
            Family::Gaussian => (y - mu) * (y - mu),
            Family::Poisson => 2.0 * (xlogy(y, y / mu) - (y - mu)),
            Family::Binomial => 2.0 * (xlogy(y, y / mu) + xlogy(1.0 - y, (1.0 - y) / (1.0 - mu))),
            Family::Gamma => 2.0 * (-(y / mu).ln() + (y - mu) / mu),
        };
        d.max(0.0)
    }

    /// Exact log density of one observation with prior weight `a` at scale `phi`.
    ///
    /// Poisson and binomial ignore `phi`. For the binomial `y` is a
    /// proportion and `a` the number of trials.
    pub fn log_density(self, y: f64, mu: f64, phi: f64, a: f64) -> f64 {
        match self {
            Family::Gaussian => -0.5 * (LN_2PI + (phi / a).ln()) - a * (y - mu) * (y - mu) / (2.0 * phi),
            Family::Poisson => a * (xlogy(y, mu) - mu) - lgamma(y + 1.0),
            Family::Binomial => {
                let k = y * a;
                lgamma(a + 1.0) - lgamma(k + 1.0) - lgamma(a - k + 1.0)
                    + a * (xlogy(y, mu) + xlogy(1.0 - y, 1.0 - mu))
            }
            Family::Gamma => {
                let nu = a / phi;
                nu * (nu / mu).ln() + (nu - 1.0) * y.ln() - nu * y / mu - lgamma(nu)
            }
        }
    }
}

/// x·ln(z) with the convention 0·ln(anything) = 0.
#[inline]
pub(crate) fn xlogy(x: f64, z: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * z.ln()
    }
}

/// Link function g mapping the mean to the linear predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Identity,
    Log,
    Logit,
}

impl Link {
    pub fn name(self) -> &'static str {
        match self {
            Link::Identity => "identity",
            Link::Log => "log",
            Link::Logit => "logit",
        }
    }

    pub fn canonical_for(self) -> Option<Family> {
        match self {
            Link::Identity => Some(Family::Gaussian),
            Link::Log => Some(Family::Poisson),
            Link::Logit => Some(Family::Binomial),
        }
    }

    /// g(μ).
    pub fn link(self, mu: f64) -> f64 {
        match self {
            Link::Identity => mu,
            Link::Log => mu.ln(),
            Link::Logit => (mu / (1.0 - mu)).ln(),
        }
    }

    /// g⁻¹(η).
    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            Link::Identity => eta,
            Link::Log => eta.exp(),
            Link::Logit => {
                if eta >= 0.0 {
                    1.0 / (1.0 + (-eta).exp())
                } else {
                    let e = eta.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    /// dμ/dη at η.
    pub fn dmu_deta(self, eta: f64) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Log => eta.exp(),
            Link::Logit => {
                let m = self.inverse(eta);
                m * (1.0 - m)
            }
        }
    }

    /// g′(μ).
    pub fn deriv(self, mu: f64) -> f64 {
        match self {
            Link::Identity => 1.0,
            Link::Log => 1.0 / mu,
            Link::Logit => 1.0 / (mu * (1.0 - mu)),
        }
    }

    /// g″(μ).
    pub fn deriv2(self, mu: f64) -> f64 {
        match self {
            Link::Identity => 0.0,
            Link::Log => -1.0 / (mu * mu),
            Link::Logit => (2.0 * mu - 1.0) / (mu * mu * (1.0 - mu) * (1.0 - mu)),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "gaussian" => Ok(Family::Gaussian),
            "poisson" => Ok(Family::Poisson),
            "binomial" => Ok(Family::Binomial),
            "gamma" => Ok(Family::Gamma),
            _ => Err(crate::Error::Config(format!("unknown family '{s}'"))),
        }
    }
}

impl std::str::FromStr for Link {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "identity" => Ok(Link::Identity),
            "log" => Ok(Link::Log),
            "logit" => Ok(Link::Logit),
            _ => Err(crate::Error::Config(format!("unknown link '{s}'"))),
        }
    }
}
