//! Numerical identification laboratory for semiparametric discrete-outcome
//! models with a Gaussian latent index.
//!
//! The library is organized around one forward/inverse loop:
//!
//! * [`model`] builds structural primitives (index coefficients, heterogeneity
//!   mixtures, choice families) and computes exact conditional choice
//!   probability (CCP) tables by quadrature.
//! * [`deconv`] inverts the integral equation linking CCPs to the latent-index
//!   choice kernel `h(y, w, v)` via regularized linear solves.
//! * [`betaid`] recovers the index coefficients (slope squared and
//!   intercept/slope ratio) from derivative identities of the CCP surface,
//!   including the affine/exponential degeneracy screen and sign resolution.
//! * [`games`] covers 2-player binary complete-information games: outcome
//!   region geometry for minimax, collusion, and rationalizability, and exact
//!   outcome-probability tables.
//! * [`recover`] turns recovered kernels into structural summaries:
//!   heterogeneity CDFs along instrument rays, solution-concept
//!   classification, and payoff recovery.
//! * [`numerics`] holds the shared plumbing: grids, Gaussian density/CDF,
//!   Gauss-Hermite quadrature, finite differences, and regularized solvers.
//!
//! Every inverse routine is designed to be validated against a forward oracle
//! computed to quadrature accuracy; tests in each module do exactly that.

pub mod betaid;
pub mod deconv;
pub mod error;
pub mod fmtnum;
pub mod games;
pub mod model;
pub mod numerics;
pub mod recover;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Library version, recorded in run manifests by downstream tools.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
