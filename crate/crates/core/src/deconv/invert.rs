//! Regularized inversion of the discretized integral equation.
//!
//! The unknown kernel is parameterized as a level plus increments between
//! adjacent grid nodes rather than as raw node values. Minimum-norm
//! regularization then prefers kernels that stay flat where the data carry
//! no information. Solving for node values directly leaves a core bias of
//! order 0.1 on these operators at any spectral cutoff, because the
//! plateaus of a bounded kernel are not in the span of the leading right
//! singular vectors. The level itself is unpenalized: its coefficient is
//! concentrated out of the least-squares problem exactly.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::deconv::kernel::{build_kernel_matrix, ChoiceKernel};
use crate::model::{CCPTable, IndexModel};
use crate::numerics::{regularized_solve_full, Grid1D, Regularization};
use crate::{Error, Result};

/// Pre-clip excursion beyond [0,1] above which the inversion is considered
/// unreliable rather than merely noisy.
pub const OVERSHOOT_LIMIT: f64 = 0.1;

/// Expected residual scale of a correctly specified inversion, relative to
/// the Euclidean norm of the probability series. Discretization of the
/// kernel dominates this floor on the default grids.
const NOISE_FLOOR_REL: f64 = 1e-4;

/// A residual this many times above the floor flags a misspecified index.
const MISSPEC_MULTIPLIER: f64 = 5.0;

/// Which latent variable the recovered kernel is a function of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSpace {
    /// v = z2 * (index + noise). The kernel is common across z2 values, so
    /// the z2 coordinate of the table must be scalar and enters the matrix.
    Product,
    /// v = index + noise itself. The table's z2 block only selects which
    /// slice of the data to invert; the matrix is built with unit scale.
    Index,
}

/// Spectral and fit diagnostics from one kernel recovery.
#[derive(Debug, Clone, Serialize)]
pub struct DeconvDiagnostics {
    /// Singular values of the solved system (the deflated increment form
    /// of the discretized kernel), descending. For the two-axis recovery
    /// these belong to the first-axis factor.
    pub singular_values: Vec<f64>,
    /// Second-axis singular values, present only for two-axis recoveries.
    pub singular_values_axis2: Option<Vec<f64>>,
    /// Spectral components retained (pairs of components for two axes).
    pub kept: usize,
    pub lambda: Option<f64>,
    /// Pre-clip fit residual per outcome, in table order.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Per-outcome residual level that counts as a clean fit.
    pub noise_floors: Vec<f64>,
    /// True when the index cannot rationalize the data with a bounded
    /// kernel: either some outcome's residual exceeds its floor by the
    /// misspecification multiplier, or fitting required leaving [0,1] by
    /// more than the overshoot limit. A misspecified index shows up one
    /// way or the other depending on how much of the spectrum is kept.
    pub misspecification_flag: bool,
    /// The residual half of the misspecification test on its own. Callers
    /// expecting a discontinuous kernel (an entry game's indicator surface)
    /// should key on this: spectral truncation of a step overshoots [0,1]
    /// no matter how well specified the index is.
    pub residual_flag: bool,
    /// Largest pre-clip excursion below 0 or above 1 across outcomes.
    pub overshoot: f64,
    pub overshoot_flag: bool,
}

fn noise_floor(b_norm: f64, m: usize) -> f64 {
    NOISE_FLOOR_REL * b_norm + 1e-6 * (m as f64).sqrt()
}

fn overshoot_of(values: &[f64]) -> f64 {
    values
        .iter()
        .map(|&v| (-v).max(v - 1.0).max(0.0))
        .fold(0.0, f64::max)
}

/// Map from increments d (length n-1) to node values with a zero anchor at
/// the central node: column k holds the indicator of "node j lies on the
/// far side of increment k from the anchor", signed by direction. Anchoring
/// at the center makes the basis commute with axis reflection on odd
/// grids, so negating the index mirrors the recovered kernel exactly.
fn increment_basis(n: usize) -> DMatrix<f64> {
    let mid = (n - 1) / 2;
    let mut c = DMatrix::zeros(n, n - 1);
    for j in 0..n {
        if j > mid {
            for k in mid..j {
                c[(j, k)] = 1.0;
            }
        } else {
            for k in j..mid {
                c[(j, k)] = -1.0;
            }
        }
    }
    c
}

/// One deconvolution axis: the kernel matrix split into the row-mass
/// direction (which carries the kernel's level) and the deflated increment
/// system (which carries its shape).
///
/// Rows are renormalized to unit mass before anything else. Each row is a
/// discretized unit-mass density, so the renormalization corrects the
/// quadrature truncation; without it the tiny row-to-row mass variation
/// leaks into the deflated data and is amplified by the smallest retained
/// singular values.
struct DeflatedAxis {
    /// Discretized kernel with unit row masses.
    k: DMatrix<f64>,
    /// Increment-to-values map.
    c: DMatrix<f64>,
    /// k * ones: image of the constant kernel.
    m: DVector<f64>,
    mm: f64,
    /// k * c: image of the increment basis.
    g: DMatrix<f64>,
    /// g with the m-direction projected out of every column.
    g_perp: DMatrix<f64>,
}

impl DeflatedAxis {
    fn new(mut k: DMatrix<f64>) -> Self {
        for i in 0..k.nrows() {
            let mass = k.row(i).sum();
            let row = k.row(i) / mass;
            k.set_row(i, &row);
        }
        let n = k.ncols();
        let c = increment_basis(n);
        let m = &k * DVector::from_element(n, 1.0);
        let mm = m.norm_squared();
        let g = &k * &c;
        let mut g_perp = g.clone();
        for j in 0..g_perp.ncols() {
            let coef = m.dot(&g.column(j)) / mm;
            let col = g_perp.column(j) - &m * coef;
            g_perp.set_column(j, &col);
        }
        DeflatedAxis { k, c, m, mm, g, g_perp }
    }

    fn project_out_m(&self, b: &DVector<f64>) -> DVector<f64> {
        b - &self.m * (self.m.dot(b) / self.mm)
    }
}

/// Recovers the choice kernel for one (w, z2) block of a CCP table by
/// solving the discretized integral equation outcome by outcome.
pub fn recover_h(
    mu: &CCPTable,
    index: &IndexModel,
    w: &str,
    z2_index: usize,
    space: KernelSpace,
    v_grid: &Grid1D,
    reg: &Regularization,
) -> Result<(ChoiceKernel, DeconvDiagnostics)> {
    let wi = mu.w_position(w)?;
    if z2_index >= mu.z2_points().len() {
        return Err(Error::InvalidInput(format!(
            "z2 index {z2_index} out of range for {} blocks",
            mu.z2_points().len()
        )));
    }
    let z2_scale = match space {
        KernelSpace::Product => {
            let point = &mu.z2_points()[z2_index];
            if point.len() != 1 {
                return Err(Error::InvalidInput(format!(
                    "product-space recovery needs scalar z2 blocks, got dimension {}",
                    point.len()
                )));
            }
            point[0]
        }
        KernelSpace::Index => 1.0,
    };
    let axis = DeflatedAxis::new(build_kernel_matrix(
        index,
        w,
        z2_scale,
        mu.z1_grid(),
        v_grid,
    )?);

    let solves: Vec<_> = (0..mu.outcomes().len())
        .into_par_iter()
        .map(|y| {
            let b = DVector::from_vec(mu.series_over_z1(wi, z2_index, y));
            let b_norm = b.norm();
            let b_perp = axis.project_out_m(&b);
            regularized_solve_full(&axis.g_perp, &b_perp, reg).map(|(d, info)| {
                let level = axis.m.dot(&(&b - &axis.g * &d)) / axis.mm;
                let x = (&axis.c * d).add_scalar(level);
                let residual = (&axis.k * &x - &b).norm();
                (x, info, residual, b_norm)
            })
        })
        .collect::<Result<_>>()?;

    let m_rows = mu.z1_grid().len();
    let mut values = Vec::with_capacity(mu.outcomes().len() * v_grid.len());
    let mut residuals = Vec::new();
    let mut noise_floors = Vec::new();
    let mut overshoot: f64 = 0.0;
    for (x, _, residual, b_norm) in &solves {
        overshoot = overshoot.max(overshoot_of(x.as_slice()));
        values.extend(x.iter().map(|&v| v.clamp(0.0, 1.0)));
        residuals.push(*residual);
        noise_floors.push(noise_floor(*b_norm, m_rows));
    }
    let (_, first, _, _) = &solves[0];
    let max_residual = residuals.iter().fold(0.0, |acc: f64, &r| acc.max(r));
    let residual_flag = residuals
        .iter()
        .zip(&noise_floors)
        .any(|(&r, &f)| r > MISSPEC_MULTIPLIER * f);

    let diagnostics = DeconvDiagnostics {
        singular_values: first.singular_values.clone(),
        singular_values_axis2: None,
        kept: first.kept,
        lambda: first.lambda,
        residuals,
        max_residual,
        noise_floors,
        misspecification_flag: overshoot > OVERSHOOT_LIMIT || residual_flag,
        residual_flag,
        overshoot,
        overshoot_flag: overshoot > OVERSHOOT_LIMIT,
    };
    let kernel = ChoiceKernel::new(
        w.to_string(),
        mu.outcomes().to_vec(),
        vec![*v_grid],
        values,
    )?;
    Ok((kernel, diagnostics))
}

struct AxisSvd {
    sigma: Vec<f64>,
    u: DMatrix<f64>,
    v: DMatrix<f64>,
}

fn axis_svd(k: &DMatrix<f64>) -> Result<AxisSvd> {
    let svd = k.clone().svd(true, true);
    let u_raw = svd.u.as_ref().expect("svd with u requested");
    let vt_raw = svd.v_t.as_ref().expect("svd with v_t requested");
    let r = svd.singular_values.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    if sigma[0] <= 0.0 {
        return Err(Error::SingularKernel("kernel factor has zero spectrum".into()));
    }
    let mut u = DMatrix::zeros(u_raw.nrows(), r);
    let mut v = DMatrix::zeros(vt_raw.ncols(), r);
    for (pos, &idx) in order.iter().enumerate() {
        u.set_column(pos, &u_raw.column(idx));
        v.set_column(pos, &vt_raw.row(idx).transpose());
    }
    Ok(AxisSvd { sigma, u, v })
}

/// Spectral filter over products sigma1_i * sigma2_j, mirroring the
/// one-axis rules of regularized_solve_full. Returns the matrix of damped
/// inverse products, the retained count, and the ridge parameter.
fn product_filter(
    s1: &[f64],
    s2: &[f64],
    reg: &Regularization,
) -> Result<(DMatrix<f64>, usize, Option<f64>)> {
    let (r1, r2) = (s1.len(), s2.len());
    let s_max = s1[0] * s2[0];
    let mut filter = DMatrix::zeros(r1, r2);
    let mut kept = 0usize;
    let mut lambda_out = None;
    match *reg {
        Regularization::Tikhonov { lambda } => {
            if lambda < 0.0 || !lambda.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "tikhonov lambda must be finite and >= 0, got {lambda}"
                )));
            }
            for i in 0..r1 {
                for j in 0..r2 {
                    let s = s1[i] * s2[j];
                    filter[(i, j)] = if lambda == 0.0 {
                        if s > s_max * 1e-14 {
                            kept += 1;
                            1.0 / s
                        } else {
                            0.0
                        }
                    } else {
                        if s * s >= lambda {
                            kept += 1;
                        }
                        s / (s * s + lambda)
                    };
                }
            }
            lambda_out = Some(lambda);
        }
        Regularization::TsvdThreshold { threshold } => {
            if !(0.0..=1.0).contains(&threshold) {
                return Err(Error::InvalidInput(format!(
                    "tsvd threshold must lie in [0, 1], got {threshold}"
                )));
            }
            let cut = (threshold * s_max).max(s_max * 1e-14);
            for i in 0..r1 {
                for j in 0..r2 {
                    let s = s1[i] * s2[j];
                    if s >= cut {
                        filter[(i, j)] = 1.0 / s;
                        kept += 1;
                    }
                }
            }
            if kept == 0 {
                filter[(0, 0)] = 1.0 / s_max;
                kept = 1;
            }
        }
        Regularization::TsvdRank { k } => {
            let mut products: Vec<f64> = Vec::with_capacity(r1 * r2);
            for i in 0..r1 {
                for j in 0..r2 {
                    let s = s1[i] * s2[j];
                    if s > s_max * 1e-14 {
                        products.push(s);
                    }
                }
            }
            if k == 0 || k > products.len() {
                return Err(Error::InvalidInput(format!(
                    "tsvd rank k = {k} outside [1, rank = {}]",
                    products.len()
                )));
            }
            products.sort_by(f64::total_cmp);
            let cut = products[products.len() - k];
            for i in 0..r1 {
                for j in 0..r2 {
                    let s = s1[i] * s2[j];
                    if s >= cut && kept < k {
                        filter[(i, j)] = 1.0 / s;
                        kept += 1;
                    }
                }
            }
        }
    }
    Ok((filter, kept, lambda_out))
}

/// Regularization for the two axis-profile subproblems of the two-axis
/// recovery. A rank budget is meaningful only for the central block, so it
/// degrades to a spectral cutoff here.
fn profile_reg(reg: &Regularization) -> Regularization {
    match reg {
        Regularization::TsvdRank { .. } => Regularization::TsvdThreshold { threshold: 1e-12 },
        other => *other,
    }
}

/// Recovers a two-axis choice kernel for a two-player game block.
///
/// The table follows the game convention: `z1_grid` is player 1's
/// instrument grid and `z2_points` holds player 2's instrument nodes as
/// one-element vectors forming a uniform grid. Both kernel factors are
/// built at unit scale, so the recovered axes live in index space.
///
/// The kernel surface is decomposed into a level, two one-axis profiles,
/// and a doubly-incremented core, each fit on the orthogonal data block
/// that identifies it; the core uses the product spectral filter, profiles
/// the one-axis rule.
pub fn recover_h2(
    mu: &CCPTable,
    indexes: [&IndexModel; 2],
    w: &str,
    v_grids: [Grid1D; 2],
    reg: &Regularization,
) -> Result<(ChoiceKernel, DeconvDiagnostics)> {
    let wi = mu.w_position(w)?;
    let mut z2_nodes = Vec::with_capacity(mu.z2_points().len());
    for point in mu.z2_points() {
        if point.len() != 1 {
            return Err(Error::InvalidInput(
                "two-player recovery needs scalar z2 blocks encoding player 2's grid".into(),
            ));
        }
        z2_nodes.push(point[0]);
    }
    let z2_grid = Grid1D::from_nodes(&z2_nodes)?;

    let ax1 = DeflatedAxis::new(build_kernel_matrix(
        indexes[0],
        w,
        1.0,
        mu.z1_grid(),
        &v_grids[0],
    )?);
    let ax2 = DeflatedAxis::new(build_kernel_matrix(
        indexes[1],
        w,
        1.0,
        &z2_grid,
        &v_grids[1],
    )?);
    let f1 = axis_svd(&ax1.g_perp)?;
    let f2 = axis_svd(&ax2.g_perp)?;
    let (filter, kept, lambda_out) = product_filter(&f1.sigma, &f2.sigma, reg)?;
    let side_reg = profile_reg(reg);

    let solves: Vec<Result<_>> = (0..mu.outcomes().len())
        .into_par_iter()
        .map(|y| {
            let mut mobs = DMatrix::zeros(mu.z1_grid().len(), z2_nodes.len());
            for i in 0..mu.z1_grid().len() {
                for j in 0..z2_nodes.len() {
                    mobs[(i, j)] = mu.value(wi, j, i, y);
                }
            }
            // Doubly deflated block -> core increments.
            let mut tilde = &mobs - &ax1.m * (ax1.m.transpose() * &mobs) / ax1.mm;
            tilde -= (&tilde * &ax2.m) * ax2.m.transpose() / ax2.mm;
            let coeffs = f1.u.transpose() * tilde * &f2.u;
            let e = &f1.v * coeffs.component_mul(&filter) * f2.v.transpose();
            let core = &ax1.g * &e * ax2.g.transpose();

            // Axis profiles from the mixed blocks, net of the core.
            let t2 = ((&mobs - &core).transpose() * &ax1.m) / ax1.mm;
            let (d2, _) = regularized_solve_full(&ax2.g_perp, &ax2.project_out_m(&t2), &side_reg)?;
            let t1 = ((&mobs - &core) * &ax2.m) / ax2.mm;
            let (d1, _) = regularized_solve_full(&ax1.g_perp, &ax1.project_out_m(&t1), &side_reg)?;

            // Level from what remains in the (m1, m2) direction.
            let remainder =
                &mobs - &core - (&ax1.g * &d1) * ax2.m.transpose() - &ax1.m * (&ax2.g * &d2).transpose();
            let level = (ax1.m.transpose() * &remainder * &ax2.m)[(0, 0)] / (ax1.mm * ax2.mm);

            let ones1 = DVector::from_element(v_grids[0].len(), 1.0);
            let ones2 = DVector::from_element(v_grids[1].len(), 1.0);
            let h = &ax1.c * e * ax2.c.transpose()
                + (&ax1.c * &d1) * ones2.transpose()
                + &ones1 * (&ax2.c * &d2).transpose()
                + level * &ones1 * ones2.transpose();
            let residual = (&ax1.k * &h * ax2.k.transpose() - &mobs).norm();
            Ok((h, residual, mobs.norm()))
        })
        .collect();
    let solves: Vec<_> = solves.into_iter().collect::<Result<_>>()?;

    let mut values = Vec::with_capacity(mu.outcomes().len() * v_grids[0].len() * v_grids[1].len());
    let mut residuals = Vec::new();
    let mut noise_floors = Vec::new();
    let mut overshoot: f64 = 0.0;
    for (h, residual, m_norm) in &solves {
        overshoot = overshoot.max(overshoot_of(h.as_slice()));
        for i in 0..v_grids[0].len() {
            for j in 0..v_grids[1].len() {
                values.push(h[(i, j)].clamp(0.0, 1.0));
            }
        }
        residuals.push(*residual);
        noise_floors.push(noise_floor(*m_norm, mu.z1_grid().len() * z2_nodes.len()));
    }
    let max_residual = residuals.iter().fold(0.0, |acc: f64, &r| acc.max(r));
    let residual_flag = residuals
        .iter()
        .zip(&noise_floors)
        .any(|(&r, &f)| r > MISSPEC_MULTIPLIER * f);

    let diagnostics = DeconvDiagnostics {
        singular_values: f1.sigma,
        singular_values_axis2: Some(f2.sigma),
        kept,
        lambda: lambda_out,
        residuals,
        max_residual,
        noise_floors,
        misspecification_flag: overshoot > OVERSHOOT_LIMIT || residual_flag,
        residual_flag,
        overshoot,
        overshoot_flag: overshoot > OVERSHOOT_LIMIT,
    };
    let kernel = ChoiceKernel::new(
        w.to_string(),
        mu.outcomes().to_vec(),
        v_grids.to_vec(),
        values,
    )?;
    Ok((kernel, diagnostics))
}
