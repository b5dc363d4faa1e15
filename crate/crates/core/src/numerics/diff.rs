//! Finite-difference derivatives of gridded functions.
//!
//! Interior nodes use central differences with O(h^2) error; edge nodes use
//! one-sided O(h^2) stencils so that downstream code can restrict attention
//! to the interior without losing the edges entirely.

use super::grid::{Grid1D, GriddedFn1, GriddedFn2};
use crate::{Error, Result};

fn check_axis_len(grid: &Grid1D) -> Result<()> {
    if grid.len() < 5 {
        return Err(Error::InvalidInput(format!(
            "finite differences need at least 5 nodes on the axis, got {}",
            grid.len()
        )));
    }
    Ok(())
}

/// Differentiates `values` along a strided axis of length `n`, writing into
/// `out` at the same positions. `get(i)` reads the i-th node on the line.
fn diff_line(n: usize, h: f64, order: u8, get: &dyn Fn(usize) -> f64, put: &mut dyn FnMut(usize, f64)) {
    match order {
        1 => {
            put(0, (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h));
            for i in 1..n - 1 {
                put(i, (get(i + 1) - get(i - 1)) / (2.0 * h));
            }
            put(
                n - 1,
                (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) / (2.0 * h),
            );
        }
        2 => {
            let h2 = h * h;
            put(
                0,
                (2.0 * get(0) - 5.0 * get(1) + 4.0 * get(2) - get(3)) / h2,
            );
            for i in 1..n - 1 {
                put(i, (get(i + 1) - 2.0 * get(i) + get(i - 1)) / h2);
            }
            put(
                n - 1,
                (2.0 * get(n - 1) - 5.0 * get(n - 2) + 4.0 * get(n - 3) - get(n - 4)) / h2,
            );
        }
        _ => unreachable!("order validated by caller"),
    }
}

/// First or second derivative of a 1-D gridded function.
pub fn partial_derivative1(f: &GriddedFn1, order: u8) -> Result<GriddedFn1> {
    if order != 1 && order != 2 {
        return Err(Error::InvalidInput(format!("derivative order must be 1 or 2, got {order}")));
    }
    check_axis_len(&f.grid)?;
    let n = f.grid.len();
    let mut out = vec![0.0; n];
    let vals = f.values();
    diff_line(n, f.grid.spacing(), order, &|i| vals[i], &mut |i, v| out[i] = v);
    GriddedFn1::new(f.grid, out)
}

/// First or second partial derivative of a 2-D gridded function along `axis`
/// (0 or 1). The other axis is held fixed line by line.
pub fn partial_derivative(f: &GriddedFn2, axis: usize, order: u8) -> Result<GriddedFn2> {
    if axis > 1 {
        return Err(Error::InvalidInput(format!("axis must be 0 or 1, got {axis}")));
    }
    if order != 1 && order != 2 {
        return Err(Error::InvalidInput(format!("derivative order must be 1 or 2, got {order}")));
    }
    check_axis_len(&f.grids[axis])?;
    let (n0, n1) = f.shape();
    let vals = f.values();
    let mut out = vec![0.0; vals.len()];
    let h = f.grids[axis].spacing();
    if axis == 0 {
        for j in 0..n1 {
            diff_line(n0, h, order, &|i| vals[i * n1 + j], &mut |i, v| {
                out[i * n1 + j] = v
            });
        }
    } else {
        for i in 0..n0 {
            diff_line(n1, h, order, &|j| vals[i * n1 + j], &mut |j, v| {
                out[i * n1 + j] = v
            });
        }
    }
    GriddedFn2::new(f.grids, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(-1.0, 1.0, n).unwrap()
    }

    #[test]
    fn quadratic_first_derivative_vanishes_at_zero() {
        let f = GriddedFn1::from_fn(grid(41), |z| z * z).unwrap();
        let d = partial_derivative1(&f, 1).unwrap();
        assert_abs_diff_eq!(d.value(20), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_second_derivative_is_exact_everywhere() {
        let f = GriddedFn1::from_fn(grid(33), |z| z * z).unwrap();
        let d = partial_derivative1(&f, 2).unwrap();
        for &v in d.values() {
            assert_abs_diff_eq!(v, 2.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn sine_derivative_matches_analytic_oracle_at_quadratic_rate() {
        // Interior error should be O(h^2) against the exact cosine.
        let g = Grid1D::new(0.0, 1.0, 101).unwrap();
        let f = GriddedFn1::from_fn(g, |z| z.sin()).unwrap();
        let d = partial_derivative1(&f, 1).unwrap();
        let i = g.nearest(0.3);
        let h = g.spacing();
        assert_abs_diff_eq!(d.value(i), g.node(i).cos(), epsilon = h * h);
    }

    #[test]
    fn derivative_is_linear_in_the_function() {
        let g = grid(21);
        let f1 = GriddedFn1::from_fn(g, |z| (2.0 * z).sin()).unwrap();
        let f2 = GriddedFn1::from_fn(g, |z| z * z * z).unwrap();
        let combo = GriddedFn1::from_fn(g, |z| 0.7 * (2.0 * z).sin() - 1.3 * z * z * z).unwrap();
        let d1 = partial_derivative1(&f1, 1).unwrap();
        let d2 = partial_derivative1(&f2, 1).unwrap();
        let dc = partial_derivative1(&combo, 1).unwrap();
        for i in 0..g.len() {
            assert_abs_diff_eq!(
                dc.value(i),
                0.7 * d1.value(i) - 1.3 * d2.value(i),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn two_dimensional_partials_act_along_one_axis_only() {
        let gx = Grid1D::new(0.0, 1.0, 11).unwrap();
        let gy = Grid1D::new(0.0, 2.0, 21).unwrap();
        let f = GriddedFn2::from_fn([gx, gy], |x, y| x * x * y).unwrap();
        let dx = partial_derivative(&f, 0, 1).unwrap();
        let dyy = partial_derivative(&f, 1, 2).unwrap();
        for i in 1..10 {
            for j in 1..20 {
                let (x, y) = (gx.node(i), gy.node(j));
                assert_abs_diff_eq!(dx.value(i, j), 2.0 * x * y, epsilon = 1e-9);
                assert_abs_diff_eq!(dyy.value(i, j), 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn small_grids_are_rejected() {
        let g = Grid1D::new(0.0, 1.0, 4).unwrap();
        let f = GriddedFn1::from_fn(g, |z| z).unwrap();
        assert!(partial_derivative1(&f, 1).is_err());
    }
}
