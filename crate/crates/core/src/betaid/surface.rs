//! The CCP surface over the instrument pair and its derivative fields.
//!
//! For one target outcome and conditioning level, eta(z1, z2) is the choice
//! probability as a function of the two instruments, and the working object
//! is eta_tilde = z2 * eta. Differentiating the integral representation of
//! eta_tilde and using phi''(x) = -phi(x) - x phi'(x) turns the unknown
//! index coefficients into coefficients of a pointwise linear identity in
//! the derivative fields; that identity is what the identification routine
//! consumes.

use serde::Serialize;

use crate::model::{CCPTable, Outcome};
use crate::numerics::{partial_derivative, Grid1D, GriddedFn2};
use crate::{Error, Result};

/// Cells whose |d eta_tilde / d z1| falls below this fraction of the grid
/// maximum are excluded wherever the identity divides by it.
pub const TAU_GRAD_REL: f64 = 1e-4;

/// Normalized curvature-variation level above which the surface carries
/// slope information (is neither affine nor exponential in z1).
pub const TAU_DEG: f64 = 1e-3;

/// Absolute slope level below which the whole surface counts as flat.
const TAU_FLAT: f64 = 1e-10;

/// Choice probability surface over (z1, z2) with the derivative fields of
/// eta_tilde = z2 * eta. Axis 0 is z1, axis 1 is z2 on all grids.
#[derive(Debug, Clone)]
pub struct EtaSurface {
    y_star: Outcome,
    w: String,
    eta: GriddedFn2,
    eta_tilde: GriddedFn2,
    d1: GriddedFn2,
    d11: GriddedFn2,
    d2: GriddedFn2,
}

impl EtaSurface {
    pub fn y_star(&self) -> &Outcome {
        &self.y_star
    }

    pub fn w(&self) -> &str {
        &self.w
    }

    pub fn z1(&self) -> &Grid1D {
        &self.eta.grids[0]
    }

    pub fn z2(&self) -> &Grid1D {
        &self.eta.grids[1]
    }

    pub fn eta(&self) -> &GriddedFn2 {
        &self.eta
    }

    pub fn eta_tilde(&self) -> &GriddedFn2 {
        &self.eta_tilde
    }

    /// d eta_tilde / d z1.
    pub fn d1(&self) -> &GriddedFn2 {
        &self.d1
    }

    /// d^2 eta_tilde / d z1^2.
    pub fn d11(&self) -> &GriddedFn2 {
        &self.d11
    }

    /// d eta_tilde / d z2.
    pub fn d2(&self) -> &GriddedFn2 {
        &self.d2
    }

    /// Slope floor below which cells are excluded from identity work.
    pub fn tau_grad(&self) -> f64 {
        TAU_GRAD_REL * self.d1.values().iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }
}

/// Extracts the eta surface for one outcome and conditioning level from a
/// CCP table whose z2 blocks are scalars forming a uniform grid.
///
/// Tables with vector-valued z2 blocks (games, multinomial with several
/// goods) must be sliced to one varying coordinate by the caller first;
/// the identification argument treats one index coordinate at a time.
pub fn build_eta(mu: &CCPTable, y_star: &Outcome, w: &str) -> Result<EtaSurface> {
    let wi = mu.w_position(w)?;
    let yi = mu.outcome_position(y_star)?;
    let mut z2_nodes = Vec::with_capacity(mu.z2_points().len());
    for point in mu.z2_points() {
        if point.len() != 1 {
            return Err(Error::InvalidInput(format!(
                "eta surface needs scalar z2 blocks, got dimension {}",
                point.len()
            )));
        }
        if point[0] == 0.0 || !point[0].is_finite() {
            return Err(Error::InvalidInput(
                "z2 grid must be bounded away from zero".into(),
            ));
        }
        z2_nodes.push(point[0]);
    }
    let z2 = Grid1D::from_nodes(&z2_nodes)?;
    let z1 = *mu.z1_grid();

    let mut eta_vals = Vec::with_capacity(z1.len() * z2.len());
    let mut tilde_vals = Vec::with_capacity(z1.len() * z2.len());
    for i in 0..z1.len() {
        for j in 0..z2.len() {
            let p = mu.value(wi, j, i, yi);
            eta_vals.push(p);
            tilde_vals.push(z2.node(j) * p);
        }
    }
    let eta = GriddedFn2::new([z1, z2], eta_vals)?;
    let eta_tilde = GriddedFn2::new([z1, z2], tilde_vals)?;
    let d1 = partial_derivative(&eta_tilde, 0, 1)?;
    let d11 = partial_derivative(&eta_tilde, 0, 2)?;
    let d2 = partial_derivative(&eta_tilde, 1, 1)?;
    Ok(EtaSurface {
        y_star: y_star.clone(),
        w: w.to_string(),
        eta,
        eta_tilde,
        d1,
        d11,
        d2,
    })
}

/// Outcome of the affine/exponential screen.
#[derive(Debug, Clone, Serialize)]
pub struct DegeneracyReport {
    pub degenerate: bool,
    /// Max over deep-interior cells of |d/dz1 (d11/d1)|, scaled by the z1
    /// span and the magnitude of the curvature ratio itself.
    pub statistic: f64,
    /// (z1, z2) indices of the cell attaining the statistic.
    pub witness: Option<(usize, usize)>,
    pub reason: Option<String>,
}

/// Tests whether eta_tilde is (numerically) affine or exponential in z1.
///
/// Both degenerate families have a curvature ratio d11/d1 that is constant
/// in z1, and central differences preserve that constancy exactly, so the
/// z1-derivative of the ratio separates them from informative surfaces at
/// machine precision. The scan stays two nodes away from the z1 edges:
/// edge stencils are one-sided and break the exact cancellation.
pub fn check_degeneracy(surface: &EtaSurface) -> DegeneracyReport {
    let (n1, n2) = surface.eta.shape();
    let max_slope = surface
        .d1
        .values()
        .iter()
        .fold(0.0f64, |a, &v| a.max(v.abs()));
    if max_slope < TAU_FLAT {
        return DegeneracyReport {
            degenerate: true,
            statistic: 0.0,
            witness: None,
            reason: Some("surface is flat along z1; no slope information".into()),
        };
    }
    let tau_grad = TAU_GRAD_REL * max_slope;
    let h1 = surface.z1().spacing();
    let span1 = surface.z1().hi() - surface.z1().lo();

    let ratio = |i: usize, j: usize| -> Option<f64> {
        let d1 = surface.d1.value(i, j);
        if d1.abs() > tau_grad {
            Some(surface.d11.value(i, j) / d1)
        } else {
            None
        }
    };
    let mut max_ratio = 0.0f64;
    for i in 1..n1 - 1 {
        for j in 0..n2 {
            if let Some(b) = ratio(i, j) {
                max_ratio = max_ratio.max(b.abs());
            }
        }
    }

    let mut statistic = 0.0f64;
    let mut witness = None;
    for i in 2..n1.saturating_sub(2) {
        for j in 0..n2 {
            if let (Some(prev), Some(next)) = (ratio(i - 1, j), ratio(i + 1, j)) {
                let variation = ((next - prev) / (2.0 * h1)).abs() * span1 / max_ratio.max(1.0);
                if variation > statistic {
                    statistic = variation;
                    witness = Some((i, j));
                }
            }
        }
    }

    if statistic > TAU_DEG {
        DegeneracyReport {
            degenerate: false,
            statistic,
            witness,
            reason: None,
        }
    } else {
        DegeneracyReport {
            degenerate: true,
            statistic,
            witness,
            reason: Some(format!(
                "curvature ratio varies by {statistic:.2e} (< {TAU_DEG:.0e}); \
                 eta_tilde is affine or exponential in z1"
            )),
        }
    }
}
