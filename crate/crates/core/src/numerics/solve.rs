//! Regularized solution of ill-conditioned linear systems via the SVD.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Strategy for damping small singular values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularization {
    /// Ridge penalty: minimizes ||Ax - b||^2 + lambda ||x||^2.
    Tikhonov { lambda: f64 },
    /// Keep singular values with sigma_i >= threshold * sigma_1.
    TsvdThreshold { threshold: f64 },
    /// Keep exactly the k leading singular components, 1 <= k <= rank.
    TsvdRank { k: usize },
}

impl Default for Regularization {
    fn default() -> Self {
        // Deconvolution against a Gaussian kernel is severely ill-posed; a
        // relative spectral cutoff gives a diagnosable parameter.
        Regularization::TsvdThreshold { threshold: 1e-6 }
    }
}

/// Spectral diagnostics from a regularized solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveInfo {
    /// Singular values of the system matrix, descending.
    pub singular_values: Vec<f64>,
    /// Number of spectral components retained (TSVD) or effectively
    /// undamped (Tikhonov counts sigma_i^2 >= lambda).
    pub kept: usize,
    /// The ridge parameter, when Tikhonov was used.
    pub lambda: Option<f64>,
    /// Euclidean norm of A x - b at the returned solution.
    pub residual: f64,
}

/// Solves `A x ~ b` with the requested regularization and returns the
/// solution along with spectral diagnostics.
pub fn regularized_solve_full(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    reg: &Regularization,
) -> Result<(DVector<f64>, SolveInfo)> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows but rhs has {} entries",
            a.nrows(),
            b.len()
        )));
    }
    if a.iter().all(|&v| v == 0.0) {
        return Err(Error::SingularKernel("all-zero kernel matrix".into()));
    }

    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u requested");
    let v_t = svd.v_t.as_ref().expect("svd with v_t requested");
    let r = svd.singular_values.len();

    // nalgebra does not guarantee ordering; sort descending once here.
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let s1 = sigma[0];
    if s1 <= 0.0 {
        return Err(Error::SingularKernel("kernel matrix has zero spectrum".into()));
    }
    let positive = sigma.iter().filter(|&&s| s > s1 * 1e-14).count();

    // Spectral coefficients c_i = u_i' b in sorted order.
    let coef: Vec<f64> = order
        .iter()
        .map(|&i| u.column(i).dot(b))
        .collect();

    let (filters, kept, lambda) = match *reg {
        Regularization::Tikhonov { lambda } => {
            if lambda < 0.0 || !lambda.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "tikhonov lambda must be finite and >= 0, got {lambda}"
                )));
            }
            let f: Vec<f64> = sigma
                .iter()
                .map(|&s| {
                    if lambda == 0.0 {
                        if s > s1 * 1e-14 {
                            1.0 / s
                        } else {
                            0.0
                        }
                    } else {
                        s / (s * s + lambda)
                    }
                })
                .collect();
            let kept = if lambda == 0.0 {
                positive
            } else {
                sigma.iter().filter(|&&s| s * s >= lambda).count()
            };
            (f, kept, Some(lambda))
        }
        Regularization::TsvdThreshold { threshold } => {
            if !(0.0..=1.0).contains(&threshold) {
                return Err(Error::InvalidInput(format!(
                    "tsvd threshold must lie in [0, 1], got {threshold}"
                )));
            }
            let cut = (threshold * s1).max(s1 * 1e-14);
            let kept = sigma.iter().filter(|&&s| s >= cut).count().max(1);
            let f: Vec<f64> = sigma
                .iter()
                .enumerate()
                .map(|(i, &s)| if i < kept { 1.0 / s } else { 0.0 })
                .collect();
            (f, kept, None)
        }
        Regularization::TsvdRank { k } => {
            if k == 0 || k > positive {
                return Err(Error::InvalidInput(format!(
                    "tsvd rank k = {k} outside [1, rank = {positive}]"
                )));
            }
            let f: Vec<f64> = sigma
                .iter()
                .enumerate()
                .map(|(i, &s)| if i < k { 1.0 / s } else { 0.0 })
                .collect();
            (f, k, None)
        }
    };

    let mut x = DVector::<f64>::zeros(a.ncols());
    for (pos, &idx) in order.iter().enumerate() {
        let w = filters[pos] * coef[pos];
        if w != 0.0 {
            x.axpy(w, &v_t.row(idx).transpose(), 1.0);
        }
    }
    let residual = (a * &x - b).norm();

    Ok((
        x,
        SolveInfo {
            singular_values: sigma,
            kept,
            lambda,
            residual,
        },
    ))
}

/// Convenience wrapper returning only the solution vector.
pub fn regularized_solve(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    reg: &Regularization,
) -> Result<DVector<f64>> {
    regularized_solve_full(a, b, reg).map(|(x, _)| x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_with_zero_lambda_returns_rhs() {
        let a = DMatrix::<f64>::identity(4, 4);
        let b = DVector::from_vec(vec![3.0, -1.0, 0.5, 2.0]);
        let x = regularized_solve(&a, &b, &Regularization::Tikhonov { lambda: 0.0 }).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(x[i], b[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn ridge_matches_closed_form_on_diagonal_systems() {
        // For diagonal A the ridge solution is x_i = a_i b_i / (a_i^2 + lambda).
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-8]));
        let b = DVector::from_vec(vec![1.0, 1e-8]);
        let lambda = 1e-6;
        let x = regularized_solve(&a, &b, &Regularization::Tikhonov { lambda }).unwrap();
        assert_abs_diff_eq!(x[0], 1.0 / (1.0 + lambda), epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 1e-16 / (1e-16 + lambda), epsilon = 1e-12);
        assert!(x[1].abs() < 1e-9, "tiny singular direction must be damped");
    }

    #[test]
    fn full_rank_tsvd_equals_direct_inverse() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, -1.0, 0.0, -1.0, 5.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let x = regularized_solve(&a, &b, &Regularization::TsvdRank { k: 3 }).unwrap();
        let direct = a.clone().lu().solve(&b).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(x[i], direct[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_lambda_reproduces_direct_solution_when_well_conditioned() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let b = DVector::from_vec(vec![1.0, 0.0]);
        let x = regularized_solve(&a, &b, &Regularization::Tikhonov { lambda: 0.0 }).unwrap();
        let direct = a.clone().lu().solve(&b).unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(x[i], direct[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn ridge_norm_shrinks_and_residual_grows_with_lambda() {
        let a = DMatrix::from_row_slice(
            4,
            3,
            &[1.0, 0.2, 0.0, 0.3, 0.9, 0.1, 0.0, 0.4, 1.1, 0.2, 0.1, 0.5],
        );
        let b = DVector::from_vec(vec![1.0, -0.5, 0.25, 0.75]);
        let mut last_norm = f64::INFINITY;
        let mut last_resid = -1.0;
        for &lambda in &[0.0, 1e-6, 1e-4, 1e-2, 1.0, 100.0] {
            let (x, info) =
                regularized_solve_full(&a, &b, &Regularization::Tikhonov { lambda }).unwrap();
            assert!(x.norm() <= last_norm + 1e-12, "norm not non-increasing");
            assert!(info.residual >= last_resid - 1e-12, "residual not non-decreasing");
            last_norm = x.norm();
            last_resid = info.residual;
        }
    }

    #[test]
    fn truncation_severity_increases_residual() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, 1.0, 0.0, 0.3, 1.0, 3.0, -1.0, 0.0, 0.0, -1.0, 5.0, 0.7, 0.3, 0.0, 0.7, 1.5,
            ],
        );
        let b = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5]);
        let mut last = -1.0;
        for k in (1..=4).rev() {
            let (_, info) = regularized_solve_full(&a, &b, &Regularization::TsvdRank { k }).unwrap();
            assert!(info.residual >= last - 1e-12);
            last = info.residual;
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let a = DMatrix::<f64>::identity(3, 3);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(
            regularized_solve(&a, &b, &Regularization::default()),
            Err(Error::DimensionMismatch(_))
        ));

        let z = DMatrix::<f64>::zeros(2, 2);
        let b2 = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(
            regularized_solve(&z, &b2, &Regularization::default()),
            Err(Error::SingularKernel(_))
        ));

        assert!(regularized_solve(&a, &DVector::zeros(3), &Regularization::TsvdRank { k: 4 }).is_err());
        assert!(regularized_solve(&a, &DVector::zeros(3), &Regularization::TsvdRank { k: 0 }).is_err());
    }

    #[test]
    fn singular_values_are_reported_descending() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        let (_, info) = regularized_solve_full(&a, &b, &Regularization::default()).unwrap();
        assert!(info.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert_abs_diff_eq!(info.singular_values[0], 2.0, epsilon = 1e-12);
    }
}
