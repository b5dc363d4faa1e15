//! Shared numerical plumbing: uniform grids, gridded functions, the Gaussian
//! density family, Gauss-Hermite quadrature, finite-difference calculus, and
//! regularized linear inversion.
//!
//! All functions here are pure; callers may evaluate them on disjoint grid
//! cells in parallel.

mod diff;
mod gauss;
mod grid;
mod solve;

pub use diff::{partial_derivative, partial_derivative1};
pub use gauss::{gaussian_cdf, gaussian_pdf, hermite_quadrature};
pub(crate) use gauss::legendre_quadrature;
pub use grid::{Grid1D, GriddedFn1, GriddedFn2};
pub use solve::{regularized_solve, regularized_solve_full, Regularization, SolveInfo};
