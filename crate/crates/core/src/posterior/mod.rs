//! Laplace, grid and sampling posteriors, impropriety checks and the
//! likelihood p-formula.

mod grid;
mod laplace;
mod mcmc;
mod pformula;

pub use grid::{
    detect_impropriety, grid_posterior, Direction, GridPosterior, ImproprietyReport, LogLik, MarginalSummary, TailCheck,
};
pub use laplace::{laplace_posterior, LaplacePosterior, LaplaceResult, PosteriorKind, ScaleMarginal};
pub use mcmc::{pooled_column, run_chains, rw_metropolis, McmcChain};
pub use pformula::{p_formula_density, trapezoid_2d, PFormulaGrid};
