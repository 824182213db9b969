//! Special functions, quadrature, mixtures and random streams.

pub mod mixture;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use mixture::{fit_gaussian_mixture_1d, fit_gaussian_mixture_1d_with, Component, MixtureModel1D, MixtureOptions};
pub use quadrature::{integrate, Quadrature};
pub use rng::RngStream;
pub use special::{
    erfc, erfc_inverse, exp_integral_gamma0, lgamma, normal_logpdf, std_normal_cdf, std_normal_pdf,
    std_normal_quantile, student_t_cdf, student_t_logpdf,
};
pub(crate) use special::{e1 as e1_unchecked, phi, phi_inv, t_cdf};
