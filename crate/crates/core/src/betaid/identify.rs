//! Index coefficients from the derivative identity of the eta surface.
//!
//! On every grid cell the surface satisfies
//!
//!   (z2 d2 - eta_tilde) / d1 - z1 = r + s * (d11 / d1)
//!
//! with r = beta0/beta1 and s = 1/beta1^2, so (r, s) solve a two-column
//! least-squares problem pooled over all cells with usable slope. One
//! informative cell identifies the pair; pooling just averages the
//! discretization error.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::betaid::surface::{check_degeneracy, EtaSurface};
use crate::model::{CCPTable, SignInfo};
use crate::{Error, Result};

/// RMS identity residual above which the surface is declared inconsistent
/// with any Gaussian single-index model. Exact-model surfaces on the
/// default grids come out around 1e-3; smooth non-index surfaces land an
/// order of magnitude above the threshold.
pub const RESID_TOL: f64 = 0.1;

/// |beta0/beta1| below which the ratio counts as zero for sign resolution.
const RATIO_ZERO_TOL: f64 = 1e-6;

/// Absolute CCP slope below which the multinomial sign probe abstains.
const TAU_SLOPE: f64 = 1e-4;

/// Identified index coefficients with fit diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct BetaEstimate {
    pub beta1_sq: f64,
    /// beta0 / beta1, identified without sign information.
    pub ratio: f64,
    pub beta0: f64,
    pub beta1: f64,
    /// Always false on a returned estimate; degenerate surfaces error out.
    pub degeneracy_flag: bool,
    /// Curvature-variation statistic from the degeneracy screen.
    pub degeneracy_statistic: f64,
    pub n_cells: usize,
    pub rms_residual: f64,
    pub max_abs_residual: f64,
    /// Identity residual per used cell, in (z1, z2) row-major cell order.
    pub cell_residuals: Vec<f64>,
}

/// Per-cell pieces of the identity: target t = A - z1 and regressor B,
/// collected over cells with slope above the surface's tau_grad.
struct IdentityCells {
    targets: Vec<f64>,
    regressors: Vec<f64>,
}

fn collect_cells(surface: &EtaSurface) -> IdentityCells {
    let (n1, n2) = surface.eta().shape();
    let tau = surface.tau_grad();
    let mut targets = Vec::new();
    let mut regressors = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            let d1 = surface.d1().value(i, j);
            if d1.abs() <= tau {
                continue;
            }
            let z1 = surface.z1().node(i);
            let z2 = surface.z2().node(j);
            let a = (z2 * surface.d2().value(i, j) - surface.eta_tilde().value(i, j)) / d1;
            targets.push(a - z1);
            regressors.push(surface.d11().value(i, j) / d1);
        }
    }
    IdentityCells { targets, regressors }
}

fn least_squares(cells: &IdentityCells) -> Result<(f64, f64, Vec<f64>)> {
    let m = cells.targets.len();
    if m < 2 {
        return Err(Error::IdentificationFailure(format!(
            "only {m} cells carry slope information"
        )));
    }
    let mut design = DMatrix::zeros(m, 2);
    for (row, &b) in cells.regressors.iter().enumerate() {
        design[(row, 0)] = 1.0;
        design[(row, 1)] = b;
    }
    let rhs = DVector::from_column_slice(&cells.targets);
    let svd = design.clone().svd(true, true);
    let coef = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::IdentificationFailure(e.to_string()))?;
    let residuals: Vec<f64> = (0..m)
        .map(|row| cells.targets[row] - coef[0] - coef[1] * cells.regressors[row])
        .collect();
    Ok((coef[0], coef[1], residuals))
}

fn rms(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

fn validated_sign(s: i8, what: &str) -> Result<f64> {
    match s {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        other => Err(Error::SignUnresolvable(format!(
            "sign of {what} must be +1 or -1, got {other}"
        ))),
    }
}

/// Solves the pooled identity for (beta0/beta1, 1/beta1^2) and resolves the
/// remaining two-fold sign ambiguity from `sign_info`.
///
/// A known sign of beta1 always suffices; a known sign of beta0 works only
/// when the ratio is nonzero, since beta0 = 0 says nothing about beta1.
pub fn identify_beta(surface: &EtaSurface, sign_info: SignInfo) -> Result<BetaEstimate> {
    let report = check_degeneracy(surface);
    if report.degenerate {
        return Err(Error::DegenerateSurface(
            report.reason.unwrap_or_else(|| "degeneracy screen failed".into()),
        ));
    }
    let cells = collect_cells(surface);
    let (r, s, residuals) = least_squares(&cells)?;
    if s <= 0.0 {
        return Err(Error::IdentificationFailure(format!(
            "curvature coefficient s = {s:.4e} is not positive; \
             no real beta1 is consistent with the surface"
        )));
    }
    let rms_residual = rms(&residuals);
    if rms_residual > RESID_TOL {
        return Err(Error::IdentificationFailure(format!(
            "identity residual rms {rms_residual:.3} exceeds {RESID_TOL}; \
             the surface is not a Gaussian single-index CCP"
        )));
    }

    let beta1_sq = 1.0 / s;
    let abs_beta1 = beta1_sq.sqrt();
    let (beta0, beta1) = match sign_info {
        SignInfo::SignOfBeta1(sg) => {
            let beta1 = validated_sign(sg, "beta1")? * abs_beta1;
            (r * beta1, beta1)
        }
        SignInfo::SignOfBeta0(sg) => {
            let sign = validated_sign(sg, "beta0")?;
            if r.abs() <= RATIO_ZERO_TOL {
                return Err(Error::SignUnresolvable(format!(
                    "beta0/beta1 = {r:.2e} is zero; the sign of beta0 \
                     cannot pin down beta1"
                )));
            }
            let beta0 = sign * (r.abs() * abs_beta1);
            (beta0, beta0 / r)
        }
    };
    let max_abs_residual = residuals.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    Ok(BetaEstimate {
        beta1_sq,
        ratio: r,
        beta0,
        beta1,
        degeneracy_flag: false,
        degeneracy_statistic: report.statistic,
        n_cells: residuals.len(),
        rms_residual,
        max_abs_residual,
        cell_residuals: residuals,
    })
}

/// Sign of beta1 for multinomial/bundle tables from the monotonicity of the
/// outside-option probability in z1 at an all-equal positive z2 point.
///
/// Raising the index raises every inside utility, so with z2 > 0 the
/// outside share falls iff beta1 > 0. Returns None (abstains) when the
/// fitted slope is too flat to call.
pub fn identify_beta1_sign_multinomial(mu: &CCPTable, w: &str) -> Result<Option<i8>> {
    let wi = mu.w_position(w)?;
    let outside = mu
        .outcomes()
        .iter()
        .position(|y| y.is_outside())
        .ok_or_else(|| Error::InvalidInput("table has no outside option".into()))?;
    let block = mu
        .z2_points()
        .iter()
        .position(|p| p[0] > 0.0 && p.iter().all(|&v| v == p[0]))
        .ok_or_else(|| {
            Error::InvalidInput(
                "no z2 point with all coordinates equal and positive".into(),
            )
        })?;
    let series = mu.series_over_z1(wi, block, outside);
    let nodes = mu.z1_grid().nodes();
    let mean_z: f64 = nodes.iter().sum::<f64>() / nodes.len() as f64;
    let mean_p: f64 = series.iter().sum::<f64>() / series.len() as f64;
    let cov: f64 = nodes
        .iter()
        .zip(&series)
        .map(|(&z, &p)| (z - mean_z) * (p - mean_p))
        .sum();
    let var: f64 = nodes.iter().map(|&z| (z - mean_z) * (z - mean_z)).sum();
    let slope = cov / var;
    if slope.abs() < TAU_SLOPE {
        return Ok(None);
    }
    Ok(Some(if slope < 0.0 { 1 } else { -1 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::betaid::surface::build_eta;
    use crate::model::{
        ccp_exact, Family, GDistribution, GMixture, IndexModel, ModelSpec, Outcome,
    };
    use crate::numerics::{gaussian_cdf, Grid1D};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn binary_spec(beta0: f64, beta1: f64, z1: Grid1D, z2: &Grid1D) -> ModelSpec {
        let w = vec!["w0".to_string()];
        ModelSpec::new(
            Family::Binary,
            w.clone(),
            IndexModel::single(beta0, beta1, SignInfo::SignOfBeta1(if beta1 >= 0.0 { 1 } else { -1 }))
                .unwrap(),
            GDistribution::homogeneous(1, &w, GMixture::standard_normal(1)).unwrap(),
            z1,
            z2.nodes().iter().map(|&v| vec![v]).collect(),
        )
        .unwrap()
    }

    fn default_grids() -> (Grid1D, Grid1D) {
        (
            Grid1D::new(-1.0, 1.0, 65).unwrap(),
            Grid1D::new(0.5, 1.5, 33).unwrap(),
        )
    }

    fn estimate(beta0: f64, beta1: f64, sign_info: SignInfo) -> BetaEstimate {
        let (z1, z2) = default_grids();
        let table = ccp_exact(&binary_spec(beta0, beta1, z1, &z2)).unwrap();
        let surface = build_eta(&table, &Outcome::Index(1), "w0").unwrap();
        identify_beta(&surface, sign_info).unwrap()
    }

    #[test]
    fn gaussian_dgp_recovers_slope_square_and_ratio() {
        let est = estimate(0.5, 1.0, SignInfo::SignOfBeta0(1));
        assert_abs_diff_eq!(est.beta1_sq, 1.0, epsilon = 0.01);
        assert_abs_diff_eq!(est.ratio, 0.5, epsilon = 0.01);
        assert_abs_diff_eq!(est.beta0, 0.5, epsilon = 0.01);
        assert_abs_diff_eq!(est.beta1, 1.0, epsilon = 0.01);
        assert!(!est.degeneracy_flag);
        assert!(est.rms_residual < RESID_TOL / 10.0, "rms {}", est.rms_residual);
    }

    #[test]
    fn flipped_sign_information_negates_the_estimate_exactly() {
        let plus = estimate(0.5, 1.0, SignInfo::SignOfBeta0(1));
        let minus = estimate(0.5, 1.0, SignInfo::SignOfBeta0(-1));
        assert_eq!(minus.beta0, -plus.beta0);
        assert_eq!(minus.beta1, -plus.beta1);
        assert_eq!(minus.beta1_sq, plus.beta1_sq);
        assert_eq!(minus.ratio, plus.ratio);
    }

    #[test]
    fn beta1_sign_information_resolves_the_same_way() {
        let plus = estimate(0.5, 1.0, SignInfo::SignOfBeta1(1));
        let minus = estimate(0.5, 1.0, SignInfo::SignOfBeta1(-1));
        assert!(plus.beta1 > 0.0 && plus.beta0 > 0.0);
        assert_eq!(minus.beta1, -plus.beta1);
        assert_eq!(minus.beta0, -plus.beta0);
    }

    #[test]
    fn zero_ratio_requires_the_sign_of_beta1() {
        let (z1, z2) = default_grids();
        let table = ccp_exact(&binary_spec(0.0, 1.0, z1, &z2)).unwrap();
        let surface = build_eta(&table, &Outcome::Index(1), "w0").unwrap();
        let err = identify_beta(&surface, SignInfo::SignOfBeta0(1));
        assert!(matches!(err, Err(Error::SignUnresolvable(_))));
        let est = identify_beta(&surface, SignInfo::SignOfBeta1(1)).unwrap();
        assert_abs_diff_eq!(est.beta0, 0.0, epsilon = 1e-3);
        assert_abs_diff_eq!(est.beta1, 1.0, epsilon = 0.01);
    }

    #[test]
    fn degenerate_surface_is_refused() {
        let (z1, z2) = default_grids();
        let z2_points: Vec<Vec<f64>> = z2.nodes().iter().map(|&v| vec![v]).collect();
        let table = CCPTable::from_fn(
            vec![Outcome::Index(0), Outcome::Index(1)],
            vec!["w0".into()],
            z2_points,
            z1,
            |_, _, z1i| {
                let p = 0.3 + 0.1 * z1.node(z1i);
                vec![1.0 - p, p]
            },
        )
        .unwrap();
        let surface = build_eta(&table, &Outcome::Index(1), "w0").unwrap();
        assert!(matches!(
            identify_beta(&surface, SignInfo::SignOfBeta1(1)),
            Err(Error::DegenerateSurface(_))
        ));
    }

    /// Binary table over the default grids with mu(1 | z1, z2) = f(z1).
    fn z1_only_table(f: impl Fn(f64) -> f64) -> CCPTable {
        let (z1, z2) = default_grids();
        let z2_points: Vec<Vec<f64>> = z2.nodes().iter().map(|&v| vec![v]).collect();
        CCPTable::from_fn(
            vec![Outcome::Index(0), Outcome::Index(1)],
            vec!["w0".into()],
            z2_points,
            z1,
            |_, _, z1i| {
                let p = f(z1.node(z1i));
                vec![1.0 - p, p]
            },
        )
        .unwrap()
    }

    #[test]
    fn wrong_curvature_sign_is_inconsistent() {
        // sinh bends away from the mean, the opposite of any Gaussian
        // smoothing, so the fitted s lands negative.
        let table = z1_only_table(|z| 0.5 + 0.1 * (1.2 * z).sinh());
        let surface = build_eta(&table, &Outcome::Index(1), "w0").unwrap();
        match identify_beta(&surface, SignInfo::SignOfBeta1(1)) {
            Err(Error::IdentificationFailure(msg)) => {
                assert!(msg.contains("not positive"), "unexpected message: {msg}")
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn non_index_surface_fails_the_residual_check() {
        let table = z1_only_table(|z| 0.5 + 0.1 * (1.2 * z).sin());
        let surface = build_eta(&table, &Outcome::Index(1), "w0").unwrap();
        match identify_beta(&surface, SignInfo::SignOfBeta1(1)) {
            Err(Error::IdentificationFailure(msg)) => {
                assert!(msg.contains("residual"), "unexpected message: {msg}")
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn shifting_z1_and_the_intercept_together_is_equivariant() {
        let c = 0.4;
        let base = estimate(0.5, 1.0, SignInfo::SignOfBeta1(1));
        let z1_shifted = Grid1D::new(-1.0 + c, 1.0 + c, 65).unwrap();
        let (_, z2) = default_grids();
        let table = ccp_exact(&binary_spec(0.5 - c, 1.0, z1_shifted, &z2)).unwrap();
        let surface = build_eta(&table, &Outcome::Index(1), "w0").unwrap();
        let shifted = identify_beta(&surface, SignInfo::SignOfBeta1(1)).unwrap();
        assert_abs_diff_eq!(shifted.beta1_sq, base.beta1_sq, epsilon = 1e-3);
        assert_abs_diff_eq!(shifted.ratio + c, base.ratio, epsilon = 1e-3);
    }

    #[test]
    fn identity_residual_shrinks_at_second_order_under_refinement() {
        // Residual of d11 = -b1^2 eta_tilde - b1 (b0 + b1 z1) d1
        //                  + b1^2 z2 d2 on interior cells.
        let (beta0, beta1) = (0.5, 1.0);
        let max_resid = |n1: usize, n2: usize| -> f64 {
            let z1 = Grid1D::new(-1.0, 1.0, n1).unwrap();
            let z2 = Grid1D::new(0.5, 1.5, n2).unwrap();
            let table = ccp_exact(&binary_spec(beta0, beta1, z1, &z2)).unwrap();
            let s = build_eta(&table, &Outcome::Index(1), "w0").unwrap();
            let mut worst = 0.0f64;
            for i in 1..n1 - 1 {
                for j in 1..n2 - 1 {
                    let lhs = s.d11().value(i, j);
                    let rhs = -beta1 * beta1 * s.eta_tilde().value(i, j)
                        - beta1 * (beta0 + beta1 * z1.node(i)) * s.d1().value(i, j)
                        + beta1 * beta1 * z2.node(j) * s.d2().value(i, j);
                    worst = worst.max((lhs - rhs).abs());
                }
            }
            worst
        };
        let coarse = max_resid(33, 17);
        let fine = max_resid(65, 33);
        assert!(
            coarse > 3.0 * fine,
            "refinement did not shrink the identity residual: {coarse} vs {fine}"
        );
    }

    #[test]
    fn true_slope_fits_an_order_of_magnitude_better_than_wrong_ones() {
        let (z1, z2) = default_grids();
        let table = ccp_exact(&binary_spec(0.5, 1.0, z1, &z2)).unwrap();
        let surface = build_eta(&table, &Outcome::Index(1), "w0").unwrap();
        let cells = collect_cells(&surface);
        let (_, _, resid) = least_squares(&cells).unwrap();
        let free = rms(&resid);
        for &wrong_b1sq in &[0.25, 4.0] {
            let s_fixed = 1.0 / wrong_b1sq;
            let m = cells.targets.len() as f64;
            let r_fixed = cells
                .targets
                .iter()
                .zip(&cells.regressors)
                .map(|(&t, &b)| t - s_fixed * b)
                .sum::<f64>()
                / m;
            let forced: Vec<f64> = cells
                .targets
                .iter()
                .zip(&cells.regressors)
                .map(|(&t, &b)| t - r_fixed - s_fixed * b)
                .collect();
            assert!(
                rms(&forced) > 10.0 * free,
                "wrong beta1^2 = {wrong_b1sq} fits too well: {} vs {free}",
                rms(&forced)
            );
        }
    }

    #[test]
    fn outside_share_slope_reveals_the_index_sign() {
        let z1 = Grid1D::new(-1.0, 1.0, 33).unwrap();
        let outcomes = vec![Outcome::Index(0), Outcome::Index(1), Outcome::Index(2)];
        let table = |f: fn(f64) -> f64| {
            CCPTable::from_fn(
                outcomes.clone(),
                vec!["w0".into()],
                vec![vec![1.0, 1.0]],
                z1,
                move |_, _, z1i| {
                    let p0 = f(z1.node(z1i));
                    vec![p0, (1.0 - p0) / 2.0, (1.0 - p0) / 2.0]
                },
            )
            .unwrap()
        };
        let falling = table(|z| gaussian_cdf(-z));
        assert_eq!(identify_beta1_sign_multinomial(&falling, "w0").unwrap(), Some(1));
        let rising = table(|z| gaussian_cdf(z));
        assert_eq!(identify_beta1_sign_multinomial(&rising, "w0").unwrap(), Some(-1));
        let flat = table(|_| 0.4);
        assert_eq!(identify_beta1_sign_multinomial(&flat, "w0").unwrap(), None);
    }

    #[test]
    fn sign_probe_requires_an_equal_coordinate_positive_block() {
        let z1 = Grid1D::new(-1.0, 1.0, 33).unwrap();
        let table = CCPTable::from_fn(
            vec![Outcome::Index(0), Outcome::Index(1), Outcome::Index(2)],
            vec!["w0".into()],
            vec![vec![1.0, 0.5]],
            z1,
            |_, _, _| vec![0.2, 0.4, 0.4],
        )
        .unwrap();
        assert!(identify_beta1_sign_multinomial(&table, "w0").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn recovery_and_sign_ambiguity_hold_across_dgps(
            beta0 in -0.8f64..0.8,
            mag in 0.6f64..1.8,
            negative: bool,
        ) {
            let beta1 = if negative { -mag } else { mag };
            let z1 = Grid1D::new(-1.0, 1.0, 33).unwrap();
            let z2 = Grid1D::new(0.5, 1.5, 17).unwrap();
            let table = ccp_exact(&binary_spec(beta0, beta1, z1, &z2)).unwrap();
            let surface = build_eta(&table, &Outcome::Index(1), "w0").unwrap();
            let true_sign = if beta1 >= 0.0 { 1 } else { -1 };
            let est = identify_beta(&surface, SignInfo::SignOfBeta1(true_sign)).unwrap();
            prop_assert!((est.beta1 - beta1).abs() < 0.05, "beta1 {} vs {}", est.beta1, beta1);
            prop_assert!((est.beta0 - beta0).abs() < 0.05, "beta0 {} vs {}", est.beta0, beta0);
            let other = identify_beta(&surface, SignInfo::SignOfBeta1(-true_sign)).unwrap();
            prop_assert_eq!(other.beta1, -est.beta1);
            prop_assert_eq!(other.beta0, -est.beta0);
        }
    }
}
