//! Uniform grids and functions sampled on them.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform one-dimensional grid with at least three nodes.
///
/// The grid is closed: both `lo` and `hi` are nodes. Spacing is
/// `(hi - lo) / (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct Grid1D {
    lo: f64,
    hi: f64,
    n: usize,
}

#[derive(Deserialize)]
struct RawGrid {
    lo: f64,
    hi: f64,
    n: usize,
}

impl TryFrom<RawGrid> for Grid1D {
    type Error = Error;
    fn try_from(raw: RawGrid) -> Result<Self> {
        Grid1D::new(raw.lo, raw.hi, raw.n)
    }
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput("grid endpoints must be finite".into()));
        }
        if !(lo < hi) {
            return Err(Error::InvalidInput(format!(
                "grid requires lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidInput(format!(
                "grid requires at least 3 nodes, got {n}"
            )));
        }
        Ok(Grid1D { lo, hi, n })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    /// Node value at index `i` (0-based, `i < n`).
    pub fn node(&self, i: usize) -> f64 {
        debug_assert!(i < self.n);
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + self.spacing() * i as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Index of the node nearest to `x` (clamped to the grid).
    pub fn nearest(&self, x: f64) -> usize {
        let t = (x - self.lo) / self.spacing();
        (t.round().max(0.0) as usize).min(self.n - 1)
    }

    /// Reconstructs a grid from explicit node values, which must be strictly
    /// ascending and uniformly spaced to within 1e-9 relative tolerance.
    pub fn from_nodes(nodes: &[f64]) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "grid requires at least 3 nodes, got {}",
                nodes.len()
            )));
        }
        let grid = Grid1D::new(nodes[0], nodes[nodes.len() - 1], nodes.len())?;
        let scale = nodes[0].abs().max(nodes[nodes.len() - 1].abs()).max(1.0);
        for (i, &x) in nodes.iter().enumerate() {
            if (x - grid.node(i)).abs() > 1e-9 * scale {
                return Err(Error::InvalidInput(
                    "nodes are not uniformly spaced".into(),
                ));
            }
        }
        Ok(grid)
    }
}

/// Function sampled on a single [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedFn1 {
    pub grid: Grid1D,
    values: Vec<f64>,
}

impl GriddedFn1 {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values on a {}-node grid",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("gridded values must be finite".into()));
        }
        Ok(GriddedFn1 { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }
}

/// Function sampled on the tensor product of two [`Grid1D`]s.
///
/// Values are stored row-major in axis order: index `(i, j)` with `i` on
/// axis 0 and `j` on axis 1 lives at `i * grids[1].len() + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedFn2 {
    pub grids: [Grid1D; 2],
    values: Vec<f64>,
}

impl GriddedFn2 {
    pub fn new(grids: [Grid1D; 2], values: Vec<f64>) -> Result<Self> {
        if values.len() != grids[0].len() * grids[1].len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values on a {}x{} grid",
                values.len(),
                grids[0].len(),
                grids[1].len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("gridded values must be finite".into()));
        }
        Ok(GriddedFn2 { grids, values })
    }

    pub fn from_fn(grids: [Grid1D; 2], f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grids[0].len() * grids[1].len());
        for i in 0..grids[0].len() {
            for j in 0..grids[1].len() {
                values.push(f(grids[0].node(i), grids[1].node(j)));
            }
        }
        Self::new(grids, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grids[1].len() + j]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.grids[0].len(), self.grids[1].len())
    }
}
