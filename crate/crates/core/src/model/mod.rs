//! Structural primitives and forward maps for single-agent discrete choice.
//!
//! A model couples a Gaussian latent index `t = beta0(w) + beta1(w) z1 + e`,
//! `e ~ N(0,1)`, with a finite heterogeneity mixture `g` and a choice family
//! (binary, multinomial, or bundles). Utilities are linear in the index with
//! a per-outcome slope taken from the excluded covariate vector `z2`:
//!
//! * binary: `u_1 = z2 * t + g_1`, outside option 0;
//! * multinomial: `u_y = z2_y * t + g_y` for inside goods `y = 1..J`;
//! * bundles: `u_y = (sum_j y_j z2_j) * t + g_y` over `y in {0,1}^J`.
//!
//! `ccp_exact` integrates the induced choice probabilities over `e` and the
//! mixture exactly (point-mass mixtures) or to quadrature tolerance
//! (Gaussian mixtures); `simulate`/`ccp_empirical` provide the Monte Carlo
//! counterpart.

mod ccp;
mod forward;
mod g;
mod index;
mod sim;
mod spec;

pub use ccp::CCPTable;
pub use forward::{ccp_exact, choice_given_draw};
pub use g::{GDistribution, GMixture};
pub use index::{IndexModel, SignInfo};
pub use sim::{ccp_empirical, simulate, SimDataset, SimRow};
pub use spec::{outcome_set, Family, ModelSpec, Outcome};
