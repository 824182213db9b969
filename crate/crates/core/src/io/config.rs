use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decision::{AnalystParams, ClientParams};
use crate::error::{Error, Result};
use crate::glm::{Family, Link};
use crate::priors::{PriorSpec, ScalePriorSpec};
use crate::replication::{Analysis, TranslationKernel};

pub const DEFAULT_SEED: u64 = 20_210_101;
pub const DEFAULT_EXPOSURE_SCALE: f64 = 1000.0;

/// Run configuration read from TOML; every section is optional and
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub priors: PriorConfig,
    #[serde(default)]
    pub posterior: PosteriorConfig,
    pub decision: Option<DecisionConfig>,
    #[serde(default)]
    pub replication: ReplicationSection,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            model: ModelConfig::default(),
            data: DataConfig::default(),
            priors: PriorConfig::default(),
            posterior: PosteriorConfig::default(),
            decision: None,
            replication: ReplicationSection::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub family: Family,
    /// Canonical link when absent.
    pub link: Option<Link>,
    pub exposure_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { family: Family::Poisson, link: None, exposure_scale: DEFAULT_EXPOSURE_SCALE }
    }
}

impl ModelConfig {
    pub fn link(&self) -> Link {
        self.link.unwrap_or_else(|| self.family.canonical_link())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Trial CSV; the bundled dataset when absent.
    pub path: Option<PathBuf>,
    pub study: Option<String>,
    pub outcome: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    /// One prior per coefficient; flat when empty.
    #[serde(default)]
    pub coefficients: Vec<PriorSpec>,
    pub scale: Option<ScalePriorSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosteriorMethod {
    Laplace,
    Grid,
    Metropolis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PosteriorConfig {
    pub method: PosteriorMethod,
    pub resolution: usize,
    /// Grid half-width in standard errors around the ML estimate.
    pub half_width_se: f64,
    /// Explicit grid bounds, one `[lo, hi]` per coefficient.
    #[serde(default)]
    pub bounds: Vec<[f64; 2]>,
    pub chains: usize,
    pub n_iter: usize,
    pub burn_in: usize,
}

impl Default for PosteriorConfig {
    fn default() -> Self {
        Self {
            method: PosteriorMethod::Laplace,
            resolution: 801,
            half_width_se: 8.0,
            bounds: vec![],
            chains: 4,
            n_iter: 10_000,
            burn_in: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionConfig {
    pub client: ClientParams,
    pub analyst: Option<AnalystParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplicationSection {
    pub n_sim: usize,
    pub analyses: Vec<Analysis>,
    pub kernel: Option<TranslationKernel>,
    pub min_events_guard: usize,
    pub allow_boundary: bool,
    pub scale_dof: Option<usize>,
    /// Defaults to the last coefficient.
    pub test_index: Option<usize>,
    pub grid_resolution: usize,
}

impl Default for ReplicationSection {
    fn default() -> Self {
        Self {
            n_sim: 5000,
            analyses: vec![Analysis::Ml],
            kernel: None,
            min_events_guard: 1,
            allow_boundary: false,
            scale_dof: None,
            test_index: None,
            grid_resolution: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from(".") }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.model.exposure_scale > 0.0) {
            return Err(Error::Config("exposure_scale must be positive".into()));
        }
        for p in &self.priors.coefficients {
            p.validate()?;
        }
        if self.posterior.resolution < 3 {
            return Err(Error::Config("posterior resolution must be at least 3".into()));
        }
        if let Some(d) = &self.decision {
            d.client.validate()?;
        }
        if self.replication.n_sim < 100 {
            return Err(Error::Config("replication n_sim must be at least 100".into()));
        }
        if self.replication.analyses.is_empty() {
            return Err(Error::Config("replication needs at least one analysis".into()));
        }
        Ok(())
    }
}
