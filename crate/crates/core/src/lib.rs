//! Exponential-family GLMs with frequentist p-values and their Bayesian
//! counterpart, the π-value (twice the smaller posterior tail area).
//!
//! Module layout follows the computation: `numerics` underpins everything,
//! `glm` fits models, `priors`/`posterior`/`inference` turn fits into
//! p- and π-values, `decision` prices them, `replication` asks how they
//! would look in a repeated study, and `io` handles files and schemas.

pub mod decision;
pub mod error;
pub mod glm;
pub mod inference;
pub mod io;
pub mod numerics;
pub mod posterior;
pub mod priors;
pub mod replication;

pub use error::{Error, Result};

/// Crate version embedded in every emitted result.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
