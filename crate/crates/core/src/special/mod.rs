//! Special-function kernel: symmetric stable densities and samplers, the
//! positive stable sampler, the generalized inverse Gaussian family, and the
//! modified Bessel function of the third kind.

mod bessel;
mod gig;
mod stable;

pub use bessel::{bessel_k, bessel_k_scaled};
pub use gig::{gig_moments_by_quadrature, gig_normalizer, gig_pdf, sample_gig, GIGParams};
pub use stable::{
    sample_positive_stable, sample_symmetric_stable, symmetric_stable_pdf,
    symmetric_stable_pdf_by_inversion, StableParams,
};

pub(crate) use gig::sample_gig_with;
pub(crate) use stable::{ln_kanter_a, positive_stable_draw, standard_symmetric_draw};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecialError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what} overflows at nu={nu}, x={x}")]
    Overflow { what: &'static str, nu: f64, x: f64 },
    #[error("{what} underflows at nu={nu}, x={x}")]
    Underflow { what: &'static str, nu: f64, x: f64 },
    #[error("stable density inversion error bound {bound:.3e} exceeds 1e-8 at gamma={gamma}, x={x}")]
    InversionFailure { gamma: f64, x: f64, bound: f64 },
    #[error("not integrable: {0}")]
    NonIntegrable(String),
}
