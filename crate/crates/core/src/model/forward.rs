//! Forward maps: choices for a single draw and exact CCP tables.
//!
//! The integral over the index shock e is handled three ways depending on
//! the heterogeneity family:
//! - point-mass g: the winning outcome is piecewise constant in the index t,
//!   so probabilities are exact normal-CDF differences over the winner's
//!   t-intervals (no quadrature at all);
//! - Gaussian g with a single inside outcome: the inside utility is itself
//!   Gaussian, giving a closed form;
//! - Gaussian g with several inside outcomes: Gauss-Hermite over e with the
//!   order doubling from 40 until two successive tables agree to 1e-9
//!   (capped at 640), and an inner one-dimensional integral over the
//!   winner's utility level.

use rayon::prelude::*;

use crate::model::{CCPTable, GMixture, ModelSpec, Outcome};
use crate::numerics::{gaussian_cdf, gaussian_pdf, hermite_quadrature, legendre_quadrature};
use crate::{Error, Result};

const DOUBLING_ORDERS: [usize; 5] = [40, 80, 160, 320, 640];
const DOUBLING_TOL: f64 = 1e-9;

/// Utility-maximizing outcome for one realized draw. Ties go to the smaller
/// canonical rank.
pub fn choice_given_draw(
    spec: &ModelSpec,
    w: &str,
    z1: f64,
    z2: &[f64],
    e1: f64,
    g: &[f64],
) -> Result<Outcome> {
    if g.len() != spec.family.g_dim() {
        return Err(Error::DimensionMismatch(format!(
            "g has {} coordinates, family needs {}",
            g.len(),
            spec.family.g_dim()
        )));
    }
    if z2.len() != spec.family.z2_dim() {
        return Err(Error::DimensionMismatch(format!(
            "z2 has {} coordinates, family needs {}",
            z2.len(),
            spec.family.z2_dim()
        )));
    }
    let t = spec.index.shift(w, z1)? + e1;
    let slopes = spec.outcome_slopes(z2);
    let mut intercepts = vec![0.0];
    intercepts.extend_from_slice(g);
    let pos = winner_position(&slopes, &intercepts, t);
    Ok(spec.outcomes()[pos].clone())
}

fn winner_position(slopes: &[f64], intercepts: &[f64], t: f64) -> usize {
    let mut best = 0;
    let mut best_u = slopes[0] * t + intercepts[0];
    for p in 1..slopes.len() {
        let u = slopes[p] * t + intercepts[p];
        if u > best_u {
            best = p;
            best_u = u;
        }
    }
    best
}

/// Exact CCP table on the spec's covariate product.
pub fn ccp_exact(spec: &ModelSpec) -> Result<CCPTable> {
    let outcomes = spec.outcomes();
    let n_y = outcomes.len();
    let n1 = spec.z1_grid.len();
    let mut values = Vec::with_capacity(spec.w_levels.len() * spec.z2_points.len() * n1 * n_y);

    for w in &spec.w_levels {
        let mixture = spec.g.mixture(w)?;
        for z2 in &spec.z2_points {
            let slopes = spec.outcome_slopes(z2);
            let shifts: Vec<f64> = (0..n1)
                .map(|k| spec.index.shift(w, spec.z1_grid.node(k)))
                .collect::<Result<_>>()?;
            let block = match mixture {
                GMixture::PointMassMixture { atoms, probs } => {
                    point_mass_block(&slopes, atoms, probs, &shifts)
                }
                GMixture::GaussianMixture { means, scales, probs } => {
                    if n_y == 2 {
                        binary_gaussian_block(&slopes, means, scales, probs, &shifts)
                    } else {
                        gaussian_block_doubling(&slopes, means, scales, probs, &shifts)?
                    }
                }
            };
            values.extend(block);
        }
    }
    CCPTable::new(
        outcomes,
        spec.w_levels.clone(),
        spec.z2_points.clone(),
        spec.z1_grid,
        values,
    )
}

/// Winner intervals of the upper envelope of the utility lines
/// u_p(t) = slopes[p]·t + intercepts[p], as (position, t_lo, t_hi) pieces
/// covering the whole line; ties resolved toward the smaller position.
fn upper_envelope(slopes: &[f64], intercepts: &[f64]) -> Vec<(usize, f64, f64)> {
    let n = slopes.len();
    let mut breaks = Vec::new();
    for i in 0..n {
        for k in (i + 1)..n {
            if slopes[i] != slopes[k] {
                let t = (intercepts[k] - intercepts[i]) / (slopes[i] - slopes[k]);
                if t.is_finite() {
                    breaks.push(t);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut bounds = vec![f64::NEG_INFINITY];
    bounds.extend_from_slice(&breaks);
    bounds.push(f64::INFINITY);

    let mut pieces: Vec<(usize, f64, f64)> = Vec::new();
    for seg in bounds.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let probe = if lo.is_infinite() && hi.is_infinite() {
            0.0
        } else if lo.is_infinite() {
            hi - 1.0 - hi.abs()
        } else if hi.is_infinite() {
            lo + 1.0 + lo.abs()
        } else {
            0.5 * (lo + hi)
        };
        let winner = winner_position(slopes, intercepts, probe);
        match pieces.last_mut() {
            Some(last) if last.0 == winner => last.2 = hi,
            _ => pieces.push((winner, lo, hi)),
        }
    }
    pieces
}

fn cdf_extended(t: f64) -> f64 {
    if t == f64::INFINITY {
        1.0
    } else if t == f64::NEG_INFINITY {
        0.0
    } else {
        gaussian_cdf(t)
    }
}

/// Outcome probabilities for one point-mass component: the chance the index
/// t = shift + e lands in each winner interval.
fn atom_row(slopes: &[f64], atom: &[f64], shift: f64, row: &mut [f64]) {
    let mut intercepts = vec![0.0];
    intercepts.extend_from_slice(atom);
    for (winner, lo, hi) in upper_envelope(slopes, &intercepts) {
        row[winner] += cdf_extended(hi - shift) - cdf_extended(lo - shift);
    }
}

fn point_mass_block(
    slopes: &[f64],
    atoms: &[Vec<f64>],
    probs: &[f64],
    shifts: &[f64],
) -> Vec<f64> {
    let n_y = slopes.len();
    shifts
        .par_iter()
        .map(|&shift| {
            let mut row = vec![0.0; n_y];
            for (atom, &p) in atoms.iter().zip(probs) {
                let mut part = vec![0.0; n_y];
                atom_row(slopes, atom, shift, &mut part);
                for (r, v) in row.iter_mut().zip(&part) {
                    *r += p * v;
                }
            }
            row
        })
        .flatten()
        .collect()
}

/// Single inside outcome with Gaussian g: the inside utility is
/// N(slope·shift + mean, slope² + scale²), so each component contributes a
/// closed-form normal probability.
fn binary_gaussian_block(
    slopes: &[f64],
    means: &[Vec<f64>],
    scales: &[Vec<f64>],
    probs: &[f64],
    shifts: &[f64],
) -> Vec<f64> {
    let slope = slopes[1];
    shifts
        .iter()
        .flat_map(|&shift| {
            let p1: f64 = means
                .iter()
                .zip(scales)
                .zip(probs)
                .map(|((m, s), p)| {
                    let sd = (slope * slope + s[0] * s[0]).sqrt();
                    p * gaussian_cdf((slope * shift + m[0]) / sd)
                })
                .sum();
            [1.0 - p1, p1]
        })
        .collect()
}

/// P(outcome at `pos` | index t) for one Gaussian component.
///
/// For pos = 0 the inside utilities must all fall below zero, a product of
/// independent normal CDFs. For an inside outcome the integral runs over its
/// own utility level u = m* + s*·q with q standard normal, truncated to
/// u > 0, against the product of the other outcomes' CDFs; it is evaluated
/// by composite Gauss-Legendre on unit segments of q ∈ [max(q0,-9), 9].
fn conditional_prob(
    pos: usize,
    t: f64,
    slopes: &[f64],
    mean: &[f64],
    scale: &[f64],
    gl_base: &(Vec<f64>, Vec<f64>),
) -> f64 {
    let n_y = slopes.len();
    let m = |p: usize| slopes[p] * t + mean[p - 1];
    if pos == 0 {
        return (1..n_y).map(|p| gaussian_cdf(-m(p) / scale[p - 1])).product();
    }
    let m_star = m(pos);
    let s_star = scale[pos - 1];
    if n_y == 2 {
        return gaussian_cdf(m_star / s_star);
    }
    let lo = (-m_star / s_star).max(-9.0);
    let hi = 9.0;
    if lo >= hi {
        return 0.0;
    }
    let n_seg = (hi - lo).ceil() as usize;
    let seg_len = (hi - lo) / n_seg as f64;
    let (base_nodes, base_weights) = gl_base;
    let mut total = 0.0;
    for seg in 0..n_seg {
        let a = lo + seg as f64 * seg_len;
        let half = 0.5 * seg_len;
        let mid = a + half;
        for (&qn, &qw) in base_nodes.iter().zip(base_weights) {
            let q = mid + half * qn;
            let u = m_star + s_star * q;
            let mut f = gaussian_pdf(q);
            for p in 1..n_y {
                if p != pos {
                    f *= gaussian_cdf((u - m(p)) / scale[p - 1]);
                }
            }
            total += half * qw * f;
        }
    }
    total
}

fn gaussian_block_at_order(
    order: usize,
    slopes: &[f64],
    means: &[Vec<f64>],
    scales: &[Vec<f64>],
    probs: &[f64],
    shifts: &[f64],
    gl_base: &(Vec<f64>, Vec<f64>),
) -> Result<Vec<f64>> {
    let n_y = slopes.len();
    let (nodes, weights) = hermite_quadrature(order)?;
    Ok(shifts
        .par_iter()
        .map(|&shift| {
            let mut row = vec![0.0; n_y];
            for ((mean, scale), &p) in means.iter().zip(scales).zip(probs) {
                for (&e, &we) in nodes.iter().zip(&weights) {
                    let t = shift + e;
                    for (pos, r) in row.iter_mut().enumerate() {
                        *r += p * we * conditional_prob(pos, t, slopes, mean, scale, gl_base);
                    }
                }
            }
            row
        })
        .flatten()
        .collect())
}

fn gaussian_block_doubling(
    slopes: &[f64],
    means: &[Vec<f64>],
    scales: &[Vec<f64>],
    probs: &[f64],
    shifts: &[f64],
) -> Result<Vec<f64>> {
    let gl_base = legendre_quadrature(24, -1.0, 1.0);
    let mut prev: Option<Vec<f64>> = None;
    for order in DOUBLING_ORDERS {
        let cur =
            gaussian_block_at_order(order, slopes, means, scales, probs, shifts, &gl_base)?;
        if let Some(p) = prev {
            let diff = p
                .iter()
                .zip(&cur)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if diff < DOUBLING_TOL {
                return Ok(cur);
            }
        }
        prev = Some(cur);
    }
    Err(Error::QuadratureNonConvergence {
        max_order: *DOUBLING_ORDERS.last().unwrap(),
    })
}
