//! Exponential-family GLMs: likelihood, IRLS, deviance, scale estimators
//! and likelihood-surface diagnostics.

mod data;
mod family;
mod fit;
mod scale;
mod surface;

pub use data::ModelData;
pub use family::{Family, Link};
pub use fit::{deviance, fisher_information, fit_irls, log_likelihood, score, FitResult, IrlsOptions};
pub use scale::{scale_estimates, ScaleEstimates};
pub use surface::{
    likelihood_surface, quadraticity_diagnostic, saddlepoint_logpdf, LikelihoodSurface, QuadraticityReport,
    SurfaceGrid,
};
