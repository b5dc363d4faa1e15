//! Index coefficient identification for binary outcomes with Gaussian noise.
//!
//! The observed CCP surface mu(y* | z1, z2) determines beta1^2 and
//! beta0/beta1 through a second-order differential identity in the scaled
//! surface z2 * mu, provided the surface actually varies with z1 in a
//! non-exponential way. [`build_eta`] tabulates the surface and its
//! derivatives, [`check_degeneracy`] screens for the unidentified families,
//! and [`identify_beta`] solves for the coefficients and resolves the sign
//! from one piece of outside information.

mod identify;
mod surface;

pub use identify::{
    identify_beta, identify_beta1_sign_multinomial, BetaEstimate, RESID_TOL,
};
pub use surface::{
    build_eta, check_degeneracy, DegeneracyReport, EtaSurface, TAU_DEG, TAU_GRAD_REL,
};
