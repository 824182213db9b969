//! Predictive π-values, the replication probability density and the
//! Monte Carlo replication harness.

mod harness;
mod rpd;

pub use harness::{
    ks_distance, run_replication, simulate_response, Analysis, BayesRecord, BayesSummary, InitialAnalysis, KernelKind,
    ReplicateRecord, ReplicationConfig, ReplicationReport, ReplicationSummary, ScaleKernel, TranslationKernel,
};
pub use rpd::{
    predictive_pi, predictive_posterior, rpd_cdf, rpd_curve, rpd_mass, rpd_median, rpd_moments, rpd_pdf, PredictivePosterior,
    RpdCurve, RpdMoments, RPD_CAP,
};
