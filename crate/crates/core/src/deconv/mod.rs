//! Recovery of choice kernels from conditional choice probabilities.
//!
//! The observed probabilities are a Gaussian smoothing of the latent-index
//! kernel. This module discretizes that smoothing on a grid, inverts it
//! with spectral regularization, and reads structural content (threshold
//! behavior) off the recovered kernel.

mod gamma;
mod invert;
mod kernel;

pub use gamma::{recover_gamma, recover_gamma_all, GammaEstimate, MAX_VIOLATION_SHARE, STEP_BAND};
pub use invert::{recover_h, recover_h2, DeconvDiagnostics, KernelSpace, OVERSHOOT_LIMIT};
pub use kernel::{build_kernel_matrix, default_v_grid, ChoiceKernel, MIN_ROW_MASS};
