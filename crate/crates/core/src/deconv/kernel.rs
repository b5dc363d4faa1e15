//! The discretized integral-equation kernel and the choice-kernel container.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::fmtnum::fmt_sig12;
use crate::model::{IndexModel, Outcome};
use crate::numerics::{gaussian_pdf, Grid1D};
use crate::{Error, Result};

/// Smallest acceptable kernel row mass. Rows integrate a normal density over
/// the v grid; anything much below 1 means the grid misses the bulk of the
/// distribution and the inversion is unusable there.
pub const MIN_ROW_MASS: f64 = 0.999;

/// Discretizes the convolution that maps a choice kernel on `v_grid` to
/// observed probabilities on `z1_grid`, for a fixed w and a scalar z2:
/// entry (i, j) = φ(v_j/z2 − β0(w) − β1(w)·z1_i) · Δv / |z2|.
///
/// Pass z2 = 1 to work in index space (v = β0 + β1·z1 + e itself), as the
/// multinomial, bundle, and game pipelines do.
pub fn build_kernel_matrix(
    index: &IndexModel,
    w: &str,
    z2: f64,
    z1_grid: &Grid1D,
    v_grid: &Grid1D,
) -> Result<DMatrix<f64>> {
    if z2 == 0.0 || !z2.is_finite() {
        return Err(Error::InvalidInput(
            "z2 must be nonzero and finite: v carries no index variation otherwise".into(),
        ));
    }
    let dv = v_grid.spacing();
    let n_rows = z1_grid.len();
    let n_cols = v_grid.len();
    let mut a = DMatrix::zeros(n_rows, n_cols);
    let mut worst_mass = f64::INFINITY;
    for i in 0..n_rows {
        let shift = index.shift(w, z1_grid.node(i))?;
        let mut mass = 0.0;
        for j in 0..n_cols {
            let entry = gaussian_pdf(v_grid.node(j) / z2 - shift) * dv / z2.abs();
            a[(i, j)] = entry;
            mass += entry;
        }
        worst_mass = worst_mass.min(mass);
    }
    if worst_mass < MIN_ROW_MASS {
        return Err(Error::KernelRowMass { mass: worst_mass });
    }
    Ok(a)
}

/// Default inversion grid: the range of kernel means over the z1 grid,
/// padded by four standard deviations of the index noise, on 161 nodes.
pub fn default_v_grid(
    index: &IndexModel,
    w: &str,
    z2: f64,
    z1_grid: &Grid1D,
) -> Result<Grid1D> {
    if z2 == 0.0 || !z2.is_finite() {
        return Err(Error::InvalidInput("z2 must be nonzero and finite".into()));
    }
    let a = z2 * index.shift(w, z1_grid.lo())?;
    let b = z2 * index.shift(w, z1_grid.hi())?;
    let sd = z2.abs();
    Grid1D::new(a.min(b) - 4.0 * sd, a.max(b) + 4.0 * sd, 161)
}

/// Outcome probabilities conditional on the latent index, sampled on one or
/// two v axes. Values live in [0,1]; any inversion overshoot is clipped
/// before construction and reported in the diagnostics instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChoiceKernel")]
pub struct ChoiceKernel {
    w: String,
    outcomes: Vec<Outcome>,
    grids: Vec<Grid1D>,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawChoiceKernel {
    w: String,
    outcomes: Vec<Outcome>,
    grids: Vec<Grid1D>,
    values: Vec<f64>,
}

impl TryFrom<RawChoiceKernel> for ChoiceKernel {
    type Error = Error;
    fn try_from(raw: RawChoiceKernel) -> Result<Self> {
        ChoiceKernel::new(raw.w, raw.outcomes, raw.grids, raw.values)
    }
}

impl ChoiceKernel {
    /// `values` laid out `[outcome][v cells]`, the v cells row-major with
    /// the first axis slowest.
    pub fn new(
        w: String,
        outcomes: Vec<Outcome>,
        grids: Vec<Grid1D>,
        mut values: Vec<f64>,
    ) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidInput("kernel needs at least one outcome".into()));
        }
        if grids.is_empty() || grids.len() > 2 {
            return Err(Error::InvalidInput(format!(
                "kernel supports 1 or 2 v axes, got {}",
                grids.len()
            )));
        }
        let n_cells: usize = grids.iter().map(|g| g.len()).product();
        if values.len() != outcomes.len() * n_cells {
            return Err(Error::DimensionMismatch(format!(
                "kernel has {} values, axes imply {}",
                values.len(),
                outcomes.len() * n_cells
            )));
        }
        for v in &mut values {
            if !v.is_finite() || *v < -1e-9 || *v > 1.0 + 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "kernel value {v} outside [0,1]"
                )));
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(ChoiceKernel { w, outcomes, grids, values })
    }

    pub fn w(&self) -> &str {
        &self.w
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn grids(&self) -> &[Grid1D] {
        &self.grids
    }

    pub fn n_axes(&self) -> usize {
        self.grids.len()
    }

    pub fn n_cells(&self) -> usize {
        self.grids.iter().map(|g| g.len()).product()
    }

    pub fn outcome_position(&self, y: &Outcome) -> Result<usize> {
        self.outcomes
            .iter()
            .position(|o| o == y)
            .ok_or_else(|| Error::InvalidInput(format!("kernel has no outcome {y}")))
    }

    /// All cells of one outcome, row-major.
    pub fn outcome_values(&self, y: usize) -> &[f64] {
        let n = self.n_cells();
        &self.values[y * n..(y + 1) * n]
    }

    pub fn value1(&self, y: usize, i: usize) -> f64 {
        debug_assert_eq!(self.grids.len(), 1);
        self.outcome_values(y)[i]
    }

    pub fn value2(&self, y: usize, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.grids.len(), 2);
        self.outcome_values(y)[i * self.grids[1].len() + j]
    }

    /// Largest deviation of Σ_y h(y, v) from 1 over cells; meaningful when
    /// the kernel covers the full outcome set.
    pub fn max_sum_deviation(&self) -> f64 {
        let n = self.n_cells();
        (0..n)
            .map(|c| {
                let s: f64 = (0..self.outcomes.len())
                    .map(|y| self.values[y * n + c])
                    .sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    fn csv_header(&self) -> Vec<&'static str> {
        match self.grids.len() {
            1 => vec!["y", "w", "v", "h"],
            _ => vec!["y", "w", "v1", "v2", "h"],
        }
    }

    pub fn to_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(self.csv_header())?;
        let n = self.n_cells();
        for (yi, y) in self.outcomes.iter().enumerate() {
            for c in 0..n {
                let mut rec = vec![y.to_string(), self.w.clone()];
                match self.grids.len() {
                    1 => rec.push(fmt_sig12(self.grids[0].node(c))),
                    _ => {
                        let n2 = self.grids[1].len();
                        rec.push(fmt_sig12(self.grids[0].node(c / n2)));
                        rec.push(fmt_sig12(self.grids[1].node(c % n2)));
                    }
                }
                rec.push(fmt_sig12(self.values[yi * n + c]));
                writer.write_record(rec)?;
            }
        }
        writer.flush().map_err(Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.to_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let n_axes = {
            let got: Vec<String> = reader.headers()?.iter().map(String::from).collect();
            if got == ["y", "w", "v", "h"] {
                1
            } else if got == ["y", "w", "v1", "v2", "h"] {
                2
            } else {
                return Err(Error::Serialization(format!("unexpected CSV header {got:?}")));
            }
        };
        let parse_f64 = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Serialization(format!("bad number {s:?}")))
        };
        let mut w: Option<String> = None;
        let mut outcomes: Vec<Outcome> = Vec::new();
        let mut axis_nodes: Vec<Vec<f64>> = vec![Vec::new(); n_axes];
        let mut rows: Vec<(Outcome, Vec<f64>, f64)> = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.len() != 3 + n_axes {
                return Err(Error::Serialization("CSV record has wrong arity".into()));
            }
            let y: Outcome = record[0].parse()?;
            match &w {
                None => w = Some(record[1].to_string()),
                Some(prev) if prev != &record[1] => {
                    return Err(Error::Serialization(
                        "kernel CSV mixes several w levels".into(),
                    ));
                }
                _ => {}
            }
            let mut coords = Vec::with_capacity(n_axes);
            for a in 0..n_axes {
                let v = parse_f64(&record[2 + a])?;
                coords.push(v);
                if !axis_nodes[a].iter().any(|&x| x == v) {
                    axis_nodes[a].push(v);
                }
            }
            if !outcomes.contains(&y) {
                outcomes.push(y.clone());
            }
            rows.push((y, coords, parse_f64(&record[2 + n_axes])?));
        }
        let w = w.ok_or_else(|| Error::Serialization("CSV holds no records".into()))?;
        let mut grids = Vec::with_capacity(n_axes);
        for nodes in &mut axis_nodes {
            nodes.sort_by(f64::total_cmp);
            grids.push(Grid1D::from_nodes(nodes)?);
        }
        let n_cells: usize = grids.iter().map(|g| g.len()).product();
        let mut values = vec![f64::NAN; outcomes.len() * n_cells];
        for (y, coords, h) in rows {
            let yi = outcomes.iter().position(|o| o == &y).unwrap();
            let mut cell = 0;
            for (a, &c) in coords.iter().enumerate() {
                let k = axis_nodes[a].iter().position(|&x| x == c).unwrap();
                cell = cell * grids[a].len() + k;
            }
            let idx = yi * n_cells + cell;
            if !values[idx].is_nan() {
                return Err(Error::Serialization("duplicate kernel record".into()));
            }
            values[idx] = h;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Serialization(
                "CSV does not cover the full (y, v) product".into(),
            ));
        }
        ChoiceKernel::new(w, outcomes, grids, values)
    }

    /// Builds a kernel by sampling `f(outcome position, cell coordinates)`.
    pub fn from_fn<F>(
        w: String,
        outcomes: Vec<Outcome>,
        grids: Vec<Grid1D>,
        mut f: F,
    ) -> Result<Self>
    where
        F: FnMut(usize, &[f64]) -> f64,
    {
        let n_cells: usize = grids.iter().map(|g| g.len()).product();
        let mut values = Vec::with_capacity(outcomes.len() * n_cells);
        for y in 0..outcomes.len() {
            for c in 0..n_cells {
                let coords: Vec<f64> = match grids.len() {
                    1 => vec![grids[0].node(c)],
                    _ => {
                        let n2 = grids[1].len();
                        vec![grids[0].node(c / n2), grids[1].node(c % n2)]
                    }
                };
                values.push(f(y, &coords));
            }
        }
        ChoiceKernel::new(w, outcomes, grids, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SignInfo;
    use approx::assert_abs_diff_eq;

    fn index01() -> IndexModel {
        IndexModel::single(0.0, 1.0, SignInfo::SignOfBeta1(1)).unwrap()
    }

    #[test]
    fn rows_are_discretized_densities() {
        let z1 = Grid1D::new(-1.0, 1.0, 11).unwrap();
        let v = Grid1D::new(-6.5, 6.5, 261).unwrap();
        let a = build_kernel_matrix(&index01(), "w0", 1.0, &z1, &v).unwrap();
        for i in 0..z1.len() {
            let mass: f64 = a.row(i).iter().sum();
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-6);
        }
        // Row at z1 = 0 peaks at v = 0.
        let mid = a.row(5);
        let peak = (0..v.len()).max_by(|&p, &q| mid[p].total_cmp(&mid[q])).unwrap();
        assert_eq!(v.node(peak), 0.0);
    }

    #[test]
    fn negative_z2_reflects_the_v_axis() {
        let z1 = Grid1D::new(-1.0, 1.0, 9).unwrap();
        let v = Grid1D::new(-6.0, 6.0, 121).unwrap();
        let plus = build_kernel_matrix(&index01(), "w0", 1.0, &z1, &v).unwrap();
        let minus = build_kernel_matrix(&index01(), "w0", -1.0, &z1, &v).unwrap();
        for i in 0..z1.len() {
            for j in 0..v.len() {
                assert_abs_diff_eq!(
                    minus[(i, j)],
                    plus[(i, v.len() - 1 - j)],
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn slope_two_doubles_the_row_peak_location() {
        let index = IndexModel::single(0.0, 2.0, SignInfo::SignOfBeta1(1)).unwrap();
        let z1 = Grid1D::new(-1.0, 1.0, 9).unwrap();
        let v = Grid1D::new(-8.0, 8.0, 161).unwrap();
        let a = build_kernel_matrix(&index, "w0", 1.0, &z1, &v).unwrap();
        for (i, z1v) in z1.nodes().iter().enumerate() {
            let row = a.row(i);
            let peak = (0..v.len()).max_by(|&p, &q| row[p].total_cmp(&row[q])).unwrap();
            assert_abs_diff_eq!(v.node(peak), 2.0 * z1v, epsilon = v.spacing() / 2.0 + 1e-12);
        }
    }

    #[test]
    fn zero_z2_and_narrow_grids_are_rejected() {
        let z1 = Grid1D::new(-1.0, 1.0, 9).unwrap();
        let v = Grid1D::new(-6.0, 6.0, 121).unwrap();
        assert!(build_kernel_matrix(&index01(), "w0", 0.0, &z1, &v).is_err());
        let narrow = Grid1D::new(-1.0, 1.0, 21).unwrap();
        match build_kernel_matrix(&index01(), "w0", 1.0, &z1, &narrow) {
            Err(Error::KernelRowMass { mass }) => assert!(mass < MIN_ROW_MASS),
            other => panic!("expected row-mass failure, got {other:?}"),
        }
    }

    #[test]
    fn default_grid_covers_the_shift_range() {
        let index = IndexModel::single(0.5, 1.0, SignInfo::SignOfBeta1(1)).unwrap();
        let z1 = Grid1D::new(-1.0, 1.0, 9).unwrap();
        let v = default_v_grid(&index, "w0", 2.0, &z1).unwrap();
        assert_abs_diff_eq!(v.lo(), 2.0 * (0.5 - 1.0) - 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.hi(), 2.0 * (0.5 + 1.0) + 8.0, epsilon = 1e-12);
        assert_eq!(v.len(), 161);
        assert!(build_kernel_matrix(&index, "w0", 2.0, &z1, &v).is_ok());
    }

    #[test]
    fn csv_round_trip_one_axis() {
        let grid = Grid1D::new(-2.0, 2.0, 9).unwrap();
        let kernel = ChoiceKernel::from_fn(
            "w0".into(),
            vec![Outcome::Index(0), Outcome::Index(1)],
            vec![grid],
            |y, c| {
                let p = 1.0 / (1.0 + (-c[0]).exp());
                if y == 0 { 1.0 - p } else { p }
            },
        )
        .unwrap();
        let text = kernel.to_csv_string().unwrap();
        let back = ChoiceKernel::from_csv(text.as_bytes()).unwrap();
        assert_eq!(back.outcomes(), kernel.outcomes());
        assert_eq!(back.grids(), kernel.grids());
        for y in 0..2 {
            for i in 0..9 {
                assert_abs_diff_eq!(back.value1(y, i), kernel.value1(y, i), epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn csv_round_trip_two_axes() {
        let g1 = Grid1D::new(-1.0, 1.0, 5).unwrap();
        let g2 = Grid1D::new(0.0, 3.0, 4).unwrap();
        let kernel = ChoiceKernel::from_fn(
            "wA".into(),
            vec![Outcome::Bundle(vec![0, 0]), Outcome::Bundle(vec![1, 1])],
            vec![g1, g2],
            |y, c| ((c[0] + c[1] + y as f64) / 10.0).clamp(0.0, 1.0),
        )
        .unwrap();
        let text = kernel.to_csv_string().unwrap();
        assert!(text.starts_with("y,w,v1,v2,h\n"));
        let back = ChoiceKernel::from_csv(text.as_bytes()).unwrap();
        assert_eq!(back, kernel);
    }
}
