//! Reduction of many-player outcome kernels to one player pair.
//!
//! For games with more than two players the pairwise kernel is the limit of
//! the full kernel as every other latent coordinate goes to minus infinity
//! (those players stay out for sure). On a grid the limit is read off at the
//! most negative node of each dropped axis, provided that node is deep
//! enough for the Gaussian tail to be negligible.

use crate::numerics::{Grid1D, GriddedFn2};
use crate::{Error, Result};

/// Most negative node required on a projected-out axis; the standard normal
/// tail below this point is under 1e-15.
pub const TRUNCATION_DEPTH: f64 = -8.0;

/// One outcome's probability kernel on a product grid of latent axes,
/// stored row-major with the first axis slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeKernel {
    axes: Vec<Grid1D>,
    values: Vec<f64>,
}

impl OutcomeKernel {
    pub fn new(axes: Vec<Grid1D>, values: Vec<f64>) -> Result<Self> {
        if axes.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "outcome kernel needs at least 2 latent axes, got {}",
                axes.len()
            )));
        }
        let expect: usize = axes.iter().map(Grid1D::len).product();
        if values.len() != expect {
            return Err(Error::DimensionMismatch(format!(
                "{} values on a grid with {} nodes",
                values.len(),
                expect
            )));
        }
        Ok(OutcomeKernel { axes, values })
    }

    pub fn from_fn(axes: Vec<Grid1D>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let total: usize = axes.iter().map(Grid1D::len).product();
        let mut idx = vec![0usize; axes.len()];
        let mut point = vec![0.0; axes.len()];
        let mut values = Vec::with_capacity(total);
        for _ in 0..total {
            for (p, (g, &k)) in point.iter_mut().zip(axes.iter().zip(&idx)) {
                *p = g.node(k);
            }
            values.push(f(&point));
            for k in (0..axes.len()).rev() {
                idx[k] += 1;
                if idx[k] < axes[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self::new(axes, values)
    }

    pub fn axes(&self) -> &[Grid1D] {
        &self.axes
    }

    pub fn value(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.axes.len());
        let mut off = 0;
        for (k, &i) in idx.iter().enumerate() {
            debug_assert!(i < self.axes[k].len());
            off = off * self.axes[k].len() + i;
        }
        self.values[off]
    }
}

/// Pairwise kernel of players `i` and `j` (0-based axes), evaluated at the
/// deepest node of every other axis.
pub fn project_to_pair(h: &OutcomeKernel, i: usize, j: usize) -> Result<GriddedFn2> {
    let n = h.axes().len();
    if i >= n || j >= n || i == j {
        return Err(Error::InvalidInput(format!(
            "player pair ({i}, {j}) is not valid for {n} axes"
        )));
    }
    for (k, g) in h.axes().iter().enumerate() {
        if k != i && k != j && g.node(0) > TRUNCATION_DEPTH {
            return Err(Error::InvalidInput(format!(
                "axis {k} starts at {} but must reach {TRUNCATION_DEPTH} to stand in for the limit",
                g.node(0)
            )));
        }
    }
    let gx = h.axes()[i];
    let gy = h.axes()[j];
    let mut idx = vec![0usize; n];
    let mut values = Vec::with_capacity(gx.len() * gy.len());
    for a in 0..gx.len() {
        idx[i] = a;
        for b in 0..gy.len() {
            idx[j] = b;
            values.push(h.value(&idx));
        }
    }
    GriddedFn2::new([gx, gy], values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::region::outcome_at;
    use crate::games::structure::{test_game, SolutionConcept};

    fn grid(lo: f64, hi: f64, n: usize) -> Grid1D {
        Grid1D::new(lo, hi, n).unwrap()
    }

    #[test]
    fn kernel_indexing_is_row_major_first_axis_slowest() {
        let axes = vec![grid(0.0, 2.0, 3), grid(0.0, 3.0, 4), grid(0.0, 4.0, 5)];
        let h = OutcomeKernel::from_fn(axes, |v| v[0] + 10.0 * v[1] + 100.0 * v[2]).unwrap();
        assert_eq!(h.value(&[2, 1, 3]), 2.0 + 10.0 + 300.0);
        assert_eq!(h.value(&[0, 3, 0]), 30.0);
    }

    #[test]
    fn two_players_project_to_identity_or_transpose() {
        let gx = grid(-2.0, 2.0, 5);
        let gy = grid(-1.0, 1.0, 3);
        let h = OutcomeKernel::from_fn(vec![gx, gy], |v| 10.0 * v[0] + v[1]).unwrap();
        let keep = project_to_pair(&h, 0, 1).unwrap();
        let flip = project_to_pair(&h, 1, 0).unwrap();
        for a in 0..5 {
            for b in 0..3 {
                let want = 10.0 * gx.node(a) + gy.node(b);
                assert_eq!(keep.value(a, b), want);
                assert_eq!(flip.value(b, a), want);
            }
        }
        assert_eq!(flip.grids[0], gy);
    }

    #[test]
    fn constant_axis_drops_exactly() {
        let gx = grid(-2.0, 2.0, 4);
        let gy = grid(-1.0, 1.0, 3);
        let deep = grid(-10.0, 0.0, 6);
        let h = OutcomeKernel::from_fn(vec![gx, gy, deep], |v| v[0].sin() + v[1]).unwrap();
        let pair = project_to_pair(&h, 0, 1).unwrap();
        for a in 0..4 {
            for b in 0..3 {
                assert_eq!(pair.value(a, b), gx.node(a).sin() + gy.node(b));
            }
        }
    }

    #[test]
    fn bystander_player_reduces_to_the_two_player_kernel() {
        // Player 3 neither affects nor is affected by players 1 and 2, and
        // stays out whenever v3 is deeply negative, so the three-player
        // kernel of (y1, y2, 0) collapses to the two-player kernel.
        let g2 = test_game([0.5, -0.25], [-1.0, -0.5], SolutionConcept::Rationalizability, 0.3);
        let rank = 1; // outcome (1,0)
        let gx = grid(-2.0, 2.0, 7);
        let gy = grid(-2.0, 2.0, 5);
        let deep = grid(-8.5, 2.0, 6);
        let h3 = OutcomeKernel::from_fn(vec![gx, gy, deep], |v| {
            let pair = outcome_at(&g2, "w0", v[0], v[1]).unwrap()[rank];
            pair * f64::from(v[2] < 0.3)
        })
        .unwrap();
        let projected = project_to_pair(&h3, 0, 1).unwrap();
        let direct = GriddedFn2::from_fn([gx, gy], |v1, v2| {
            outcome_at(&g2, "w0", v1, v2).unwrap()[rank]
        })
        .unwrap();
        for a in 0..7 {
            for b in 0..5 {
                assert!((projected.value(a, b) - direct.value(a, b)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn shallow_grids_and_bad_pairs_are_rejected() {
        let shallow = grid(-5.0, 2.0, 4);
        let h =
            OutcomeKernel::from_fn(vec![shallow, shallow, shallow], |v| v[0] + v[1] + v[2])
                .unwrap();
        assert!(project_to_pair(&h, 0, 1).is_err());
        assert!(project_to_pair(&h, 1, 1).is_err());
        assert!(project_to_pair(&h, 0, 3).is_err());
        assert!(OutcomeKernel::new(vec![shallow], vec![0.0; 4]).is_err());
        assert!(OutcomeKernel::new(vec![shallow, shallow], vec![0.0; 5]).is_err());
    }
}
