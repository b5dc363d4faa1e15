//! Exact outcome probabilities on an instrument grid.
//!
//! With independent standard normal shocks the latent pair is bivariate
//! normal with unit variances and means m_i = beta0_i + beta1_i z_i, so every
//! axis-aligned cell of the region map carries a product of normal band
//! masses. Only the diagonally split collusion cell needs quadrature, a
//! single one-dimensional integral of an analytic function, evaluated by
//! order doubling until two refinements agree.

use crate::games::region::{game_outcomes, region_map, CellLabel, RegionMap};
use crate::games::structure::GameStructure;
use crate::model::CCPTable;
use crate::numerics::{gaussian_cdf, gaussian_pdf, legendre_quadrature, Grid1D};
use crate::{Error, Result};

const SPLIT_ORDERS: [usize; 4] = [20, 40, 80, 160];
const SPLIT_TOL: f64 = 1e-12;

/// Outcome probability table of a two-player game at one w level.
///
/// Rows are indexed by (z2 node, z1 node) over the per-player grids; columns
/// are the four joint actions in rank order.
pub fn game_ccp_exact(
    game: &GameStructure,
    z_grids: &[Grid1D; 2],
    w: &str,
) -> Result<CCPTable> {
    let map = region_map(game, w)?;
    let lambda = game.lambda_sel();
    let z2_points: Vec<Vec<f64>> =
        (0..z_grids[1].len()).map(|j| vec![z_grids[1].node(j)]).collect();

    let mut values = Vec::with_capacity(4 * z2_points.len() * z_grids[0].len());
    for j in 0..z_grids[1].len() {
        let m2 = game.index(1).shift(w, z_grids[1].node(j))?;
        for i in 0..z_grids[0].len() {
            let m1 = game.index(0).shift(w, z_grids[0].node(i))?;
            values.extend(cell_row(&map, lambda, m1, m2)?);
        }
    }
    CCPTable::new(game_outcomes(), vec![w.to_string()], z2_points, z_grids[0], values)
}

/// Probability of each band (below, between, above) for one latent axis.
fn band_masses(lo: f64, hi: f64, m: f64) -> [f64; 3] {
    let cl = gaussian_cdf(lo - m);
    let ch = gaussian_cdf(hi - m);
    [cl, (ch - cl).max(0.0), 1.0 - ch]
}

fn cell_row(map: &RegionMap, lambda: f64, m1: f64, m2: f64) -> Result<[f64; 4]> {
    let tx = map.thresholds(0);
    let ty = map.thresholds(1);
    let px = band_masses(tx.0, tx.1, m1);
    let py = band_masses(ty.0, ty.1, m2);
    let mut p = [0.0; 4];
    for (yb, row) in map.labels().iter().enumerate() {
        for (xb, label) in row.iter().enumerate() {
            let mass = px[xb] * py[yb];
            if mass == 0.0 {
                continue;
            }
            match label {
                CellLabel::Pure(o) => p[o.rank()] += mass,
                CellLabel::Mixed => {
                    let m = map.multiplicity().expect("mixed cell has a box");
                    p[m.first.rank()] += lambda * mass;
                    p[m.second.rank()] += (1.0 - lambda) * mass;
                }
                CellLabel::Split(s) => {
                    let below = split_below_mass(s.along_main_diagonal, tx, ty, m1, m2)?
                        .clamp(0.0, mass);
                    p[s.below.rank()] += below;
                    p[s.above.rank()] += mass - below;
                }
            }
        }
    }
    Ok(p)
}

/// Mass of the central cell on the `below` side of the diagonal.
///
/// Integrates over v_1 = t; the cell is square, so the diagonal meets the
/// corners and the inner CDF bound stays inside [lo2, hi2].
fn split_below_mass(
    along_main: bool,
    (lo1, hi1): (f64, f64),
    (lo2, hi2): (f64, f64),
    m1: f64,
    m2: f64,
) -> Result<f64> {
    let base = gaussian_cdf(lo2 - m2);
    let f = |t: f64| {
        let ylim = if along_main { t - lo1 + lo2 } else { hi2 - (t - lo1) };
        gaussian_pdf(t - m1) * (gaussian_cdf(ylim - m2) - base)
    };
    let mut prev: Option<f64> = None;
    for order in SPLIT_ORDERS {
        let (nodes, weights) = legendre_quadrature(order, lo1, hi1);
        let val: f64 = nodes.iter().zip(&weights).map(|(&t, &w)| w * f(t)).sum();
        if let Some(p) = prev {
            if (val - p).abs() <= SPLIT_TOL {
                return Ok(val);
            }
        }
        prev = Some(val);
    }
    Err(Error::QuadratureNonConvergence { max_order: *SPLIT_ORDERS.last().unwrap() })
}
