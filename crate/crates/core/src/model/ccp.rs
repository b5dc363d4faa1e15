//! Conditional choice probability tables.
//!
//! A `CCPTable` is the observable object every inverse operation consumes:
//! outcome probabilities on the product of a w level set, a list of z2
//! points, and a z1 grid. Values are stored cell-major with the outcome axis
//! fastest, so a cell's probability row is contiguous.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::fmtnum::fmt_sig12;
use crate::model::Outcome;
use crate::numerics::Grid1D;
use crate::{Error, Result};

const CSV_HEADER: [&str; 5] = ["y", "w", "z2_index", "z1", "mu"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CCPTable {
    outcomes: Vec<Outcome>,
    w_levels: Vec<String>,
    z2_points: Vec<Vec<f64>>,
    z1_grid: Grid1D,
    values: Vec<f64>,
}

impl CCPTable {
    /// `values` laid out as `[(w, z2, z1) cell][outcome]`, flattened with the
    /// outcome axis fastest. Values may stray below 0 or above 1 by at most
    /// 1e-9 (quadrature round-off) and are clamped into [0,1].
    pub fn new(
        outcomes: Vec<Outcome>,
        w_levels: Vec<String>,
        z2_points: Vec<Vec<f64>>,
        z1_grid: Grid1D,
        mut values: Vec<f64>,
    ) -> Result<Self> {
        if outcomes.is_empty() || w_levels.is_empty() || z2_points.is_empty() {
            return Err(Error::InvalidInput(
                "table needs nonempty outcome, w, and z2 axes".into(),
            ));
        }
        let expect = outcomes.len() * w_levels.len() * z2_points.len() * z1_grid.len();
        if values.len() != expect {
            return Err(Error::DimensionMismatch(format!(
                "table has {} values, axes imply {expect}",
                values.len()
            )));
        }
        for v in &mut values {
            if !v.is_finite() || *v < -1e-9 || *v > 1.0 + 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "probability {v} outside [0,1]"
                )));
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(CCPTable { outcomes, w_levels, z2_points, z1_grid, values })
    }

    /// Evaluates `f(w_index, z2_index, z1_index)` to a probability row per
    /// cell, in canonical outcome order.
    pub fn from_fn<F>(
        outcomes: Vec<Outcome>,
        w_levels: Vec<String>,
        z2_points: Vec<Vec<f64>>,
        z1_grid: Grid1D,
        mut f: F,
    ) -> Result<Self>
    where
        F: FnMut(usize, usize, usize) -> Vec<f64>,
    {
        let mut values = Vec::with_capacity(
            outcomes.len() * w_levels.len() * z2_points.len() * z1_grid.len(),
        );
        for wi in 0..w_levels.len() {
            for z2i in 0..z2_points.len() {
                for z1i in 0..z1_grid.len() {
                    let row = f(wi, z2i, z1i);
                    if row.len() != outcomes.len() {
                        return Err(Error::DimensionMismatch(format!(
                            "cell row has {} entries, expected {}",
                            row.len(),
                            outcomes.len()
                        )));
                    }
                    values.extend(row);
                }
            }
        }
        Self::new(outcomes, w_levels, z2_points, z1_grid, values)
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn w_levels(&self) -> &[String] {
        &self.w_levels
    }

    pub fn z2_points(&self) -> &[Vec<f64>] {
        &self.z2_points
    }

    pub fn z1_grid(&self) -> &Grid1D {
        &self.z1_grid
    }

    pub fn outcome_position(&self, y: &Outcome) -> Result<usize> {
        self.outcomes
            .iter()
            .position(|o| o == y)
            .ok_or_else(|| Error::InvalidInput(format!("table has no outcome {y}")))
    }

    pub fn w_position(&self, w: &str) -> Result<usize> {
        self.w_levels
            .iter()
            .position(|l| l == w)
            .ok_or_else(|| Error::InvalidInput(format!("table has no w level {w:?}")))
    }

    fn cell_offset(&self, w: usize, z2: usize, z1: usize) -> usize {
        ((w * self.z2_points.len() + z2) * self.z1_grid.len() + z1) * self.outcomes.len()
    }

    pub fn value(&self, w: usize, z2: usize, z1: usize, y: usize) -> f64 {
        self.values[self.cell_offset(w, z2, z1) + y]
    }

    /// Probability row of one cell, in outcome order.
    pub fn row(&self, w: usize, z2: usize, z1: usize) -> &[f64] {
        let off = self.cell_offset(w, z2, z1);
        &self.values[off..off + self.outcomes.len()]
    }

    /// μ(y|·) as a function of z1 for fixed (w, z2, y); the right-hand side
    /// of one deconvolution problem.
    pub fn series_over_z1(&self, w: usize, z2: usize, y: usize) -> Vec<f64> {
        (0..self.z1_grid.len()).map(|z1| self.value(w, z2, z1, y)).collect()
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let nw = self.w_levels.len();
        let n2 = self.z2_points.len();
        let n1 = self.z1_grid.len();
        (0..nw).flat_map(move |w| {
            (0..n2).flat_map(move |z2| (0..n1).map(move |z1| (w, z2, z1)))
        })
    }

    /// Largest deviation of a cell's probability row sum from 1.
    pub fn max_row_sum_error(&self) -> f64 {
        self.cells()
            .map(|(w, z2, z1)| (self.row(w, z2, z1).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(CSV_HEADER)?;
        for (w, z2, z1) in self.cells() {
            for (yi, y) in self.outcomes.iter().enumerate() {
                writer.write_record([
                    y.to_string(),
                    self.w_levels[w].clone(),
                    z2.to_string(),
                    fmt_sig12(self.z1_grid.node(z1)),
                    fmt_sig12(self.value(w, z2, z1, yi)),
                ])?;
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

    /// Reads a table written by `to_csv`. The z2 points themselves are not
    /// stored in the CSV (only their indices), so they come in as metadata.
    pub fn from_csv<R: Read>(input: R, z2_points: Vec<Vec<f64>>) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        {
            let got = reader.headers()?;
            if got.iter().ne(CSV_HEADER) {
                return Err(Error::Serialization(format!(
                    "unexpected CSV header {:?}",
                    got.iter().collect::<Vec<_>>()
                )));
            }
        }
        struct Rec {
            y: Outcome,
            w: String,
            z2: usize,
            z1: f64,
            mu: f64,
        }
        let mut recs = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.len() != 5 {
                return Err(Error::Serialization("CSV record has wrong arity".into()));
            }
            let parse_f64 = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Serialization(format!("bad number {s:?}")))
            };
            recs.push(Rec {
                y: record[0].parse()?,
                w: record[1].to_string(),
                z2: record[2]
                    .parse()
                    .map_err(|_| Error::Serialization(format!("bad z2 index {:?}", &record[2])))?,
                z1: parse_f64(&record[3])?,
                mu: parse_f64(&record[4])?,
            });
        }
        if recs.is_empty() {
            return Err(Error::Serialization("CSV holds no records".into()));
        }

        let mut outcomes: Vec<Outcome> = Vec::new();
        let mut w_levels: Vec<String> = Vec::new();
        let mut z1_nodes: Vec<f64> = Vec::new();
        for r in &recs {
            if !outcomes.contains(&r.y) {
                outcomes.push(r.y.clone());
            }
            if !w_levels.contains(&r.w) {
                w_levels.push(r.w.clone());
            }
            if !z1_nodes.iter().any(|&v| v == r.z1) {
                z1_nodes.push(r.z1);
            }
            if r.z2 >= z2_points.len() {
                return Err(Error::Serialization(format!(
                    "z2 index {} exceeds the {} supplied points",
                    r.z2,
                    z2_points.len()
                )));
            }
        }
        z1_nodes.sort_by(f64::total_cmp);
        let n1 = z1_nodes.len();
        let z1_grid = Grid1D::new(z1_nodes[0], z1_nodes[n1 - 1], n1)?;
        let scale = z1_nodes[n1 - 1].abs().max(z1_nodes[0].abs()).max(1.0);
        for (k, &v) in z1_nodes.iter().enumerate() {
            if (v - z1_grid.node(k)).abs() > 1e-9 * scale {
                return Err(Error::Serialization(
                    "z1 column does not form a uniform grid".into(),
                ));
            }
        }

        let n_cells = w_levels.len() * z2_points.len() * n1;
        let mut values = vec![f64::NAN; n_cells * outcomes.len()];
        for r in &recs {
            let yi = outcomes.iter().position(|o| o == &r.y).unwrap();
            let wi = w_levels.iter().position(|l| l == &r.w).unwrap();
            let z1i = z1_nodes.iter().position(|&v| v == r.z1).unwrap();
            let idx = ((wi * z2_points.len() + r.z2) * n1 + z1i) * outcomes.len() + yi;
            if !values[idx].is_nan() {
                return Err(Error::Serialization(format!(
                    "duplicate record for (y={}, w={}, z2={}, z1={})",
                    r.y, r.w, r.z2, r.z1
                )));
            }
            values[idx] = r.mu;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Serialization(
                "CSV does not cover the full (y, w, z2, z1) product".into(),
            ));
        }
        Self::new(outcomes, w_levels, z2_points, z1_grid, values)
    }
}
