//! Trial CSV input, TOML run configuration, result schemas and the
//! JSON / plot-CSV writers.

mod config;
mod emit;
mod results;
mod trials;

pub use config::{
    DataConfig, DecisionConfig, ModelConfig, OutputConfig, PosteriorConfig, PosteriorMethod, PriorConfig, ReplicationSection,
    RunConfig, DEFAULT_EXPOSURE_SCALE, DEFAULT_SEED,
};
pub use emit::{emit_plot_csv, emit_result_json, fmt_f64, from_json_str, to_json_string, PlotTable};
pub use results::{coefficient_rows, fit_trial, CoefficientRow, Envelope, FitOutput, RelativeRisk, Z_975};
pub use trials::{
    bundled_sglt2i, parse_trial_csv, parse_trial_reader, study_outcomes, trial_design, TrialDesign, TrialRecord, SGLT2I_CSV,
};
