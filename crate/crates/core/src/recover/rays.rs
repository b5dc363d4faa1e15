//! Heterogeneity CDF along instrument rays.
//!
//! The outside-option kernel evaluated at a scalar latent value v equals the
//! heterogeneity CDF at the point -z2 * v, so each z2 vector sweeps one line
//! through the origin as v runs over its grid. Collecting those lines gives
//! the CDF on the ray set, the largest region the data can reveal it on.
//!
//! A line whose direction has componentwise-constant sign orders its sample
//! points, so there the CDF must be non-decreasing and small inversion
//! wiggles can be repaired by monotone rearrangement (sorting). Directions
//! with mixed signs carry no such order and pass through untouched.

use std::io::{Read, Write};

use crate::deconv::ChoiceKernel;
use crate::fmtnum::fmt_sig12;
use crate::{Error, Result};

/// Largest tolerated monotonicity violation before rearrangement; anything
/// beyond this signals a failed inversion rather than quadrature fuzz.
pub const DRAWDOWN_LIMIT: f64 = 0.05;

/// CDF samples along one line through the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct RayCDF {
    /// Unit direction vector; sign-definite directions are canonicalized to
    /// the componentwise non-negative representative.
    pub direction: Vec<f64>,
    /// Ascending sample positions along the line.
    pub lambda: Vec<f64>,
    /// CDF values at `lambda * direction`.
    pub values: Vec<f64>,
}

impl RayCDF {
    /// Linear interpolation between samples, clamped at the ends.
    pub fn value_at(&self, lambda: f64) -> f64 {
        let n = self.lambda.len();
        if lambda <= self.lambda[0] {
            return self.values[0];
        }
        if lambda >= self.lambda[n - 1] {
            return self.values[n - 1];
        }
        let k = self.lambda.partition_point(|&l| l <= lambda) - 1;
        let t = (lambda - self.lambda[k]) / (self.lambda[k + 1] - self.lambda[k]);
        self.values[k] + t * (self.values[k + 1] - self.values[k])
    }
}

/// The heterogeneity CDF over the ray set of one w level.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySetCDF {
    w: String,
    rays: Vec<RayCDF>,
}

/// Per-ray recovery diagnostics.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RayDiagnostics {
    /// Largest drop below the running maximum before rearrangement.
    pub drawdown: f64,
    /// Whether the direction admitted (and received) rearrangement.
    pub rearranged: bool,
}

/// Reads the CDF off the outside-option kernels, one per z2 point.
///
/// Every kernel must be one-axis (scalar latent index, recovered at unit
/// scale) and share the w level; `z2_points[k]` is the z2 vector whose block
/// produced `kernels[k]`.
pub fn recover_fg(
    kernels: &[ChoiceKernel],
    z2_points: &[Vec<f64>],
) -> Result<(RaySetCDF, Vec<RayDiagnostics>)> {
    if kernels.is_empty() || kernels.len() != z2_points.len() {
        return Err(Error::InvalidInput(format!(
            "{} kernels against {} z2 points",
            kernels.len(),
            z2_points.len()
        )));
    }
    let w = kernels[0].w().to_string();
    let mut rays = Vec::with_capacity(kernels.len());
    let mut diags = Vec::with_capacity(kernels.len());
    for (kernel, z2) in kernels.iter().zip(z2_points) {
        if kernel.w() != w {
            return Err(Error::InvalidInput(format!(
                "kernel w level {:?} differs from {:?}",
                kernel.w(),
                w
            )));
        }
        if kernel.n_axes() != 1 {
            return Err(Error::InvalidInput(
                "ray recovery needs one-axis kernels over the scalar index".into(),
            ));
        }
        let outside = kernel
            .outcomes()
            .iter()
            .position(|o| o.is_outside())
            .ok_or_else(|| {
                Error::InvalidInput("kernel lacks the outside outcome".into())
            })?;

        let norm = z2.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidInput("z2 must be nonzero to define a ray".into()));
        }
        let nonneg = z2.iter().all(|&c| c >= 0.0);
        let nonpos = z2.iter().all(|&c| c <= 0.0);
        // F(-z2 v) = F(lambda u): flipping a nonpositive z2 to its positive
        // representative keeps the same line and restores the CDF order.
        let flip = if nonpos { -1.0 } else { 1.0 };
        let direction: Vec<f64> = z2.iter().map(|c| flip * c / norm).collect();

        let grid = kernel.grids()[0];
        let n = grid.len();
        let (lambda, values): (Vec<f64>, Vec<f64>) = if nonpos {
            // lambda = norm * v ascends with the grid.
            (0..n).map(|k| (norm * grid.node(k), kernel.value1(outside, k))).unzip()
        } else {
            // lambda = -norm * v; reverse the grid to ascend.
            (0..n)
                .rev()
                .map(|k| (-norm * grid.node(k), kernel.value1(outside, k)))
                .unzip()
        };

        let mut drawdown: f64 = 0.0;
        let mut run_max = f64::NEG_INFINITY;
        for &f in &values {
            run_max = run_max.max(f);
            drawdown = drawdown.max(run_max - f);
        }
        let sign_definite = nonneg || nonpos;
        let values = if sign_definite {
            if drawdown > DRAWDOWN_LIMIT {
                return Err(Error::MonotonicityViolation {
                    ray: format!("{direction:?}"),
                    violation: drawdown,
                });
            }
            let mut sorted = values;
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("kernel values are finite"));
            sorted
        } else {
            values
        };

        rays.push(RayCDF { direction, lambda, values });
        diags.push(RayDiagnostics { drawdown, rearranged: sign_definite });
    }
    Ok((RaySetCDF { w, rays }, diags))
}

const CSV_HEADER: [&str; 4] = ["w", "direction", "lambda", "F"];

fn fmt_direction(direction: &[f64]) -> String {
    let parts: Vec<String> = direction.iter().copied().map(fmt_sig12).collect();
    format!("({})", parts.join(","))
}

fn parse_direction(s: &str) -> Result<Vec<f64>> {
    let inner = s
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| Error::Serialization(format!("bad direction {s:?}")))?;
    inner
        .split(',')
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Error::Serialization(format!("bad direction component {p:?}")))
        })
        .collect()
}

impl RaySetCDF {
    pub fn w(&self) -> &str {
        &self.w
    }

    pub fn rays(&self) -> &[RayCDF] {
        &self.rays
    }

    pub fn to_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(CSV_HEADER)?;
        for ray in &self.rays {
            let dir = fmt_direction(&ray.direction);
            for (l, f) in ray.lambda.iter().zip(&ray.values) {
                writer.write_record([
                    self.w.clone(),
                    dir.clone(),
                    fmt_sig12(*l),
                    fmt_sig12(*f),
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

    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
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
        let mut w: Option<String> = None;
        let mut rays: Vec<(String, RayCDF)> = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.len() != 4 {
                return Err(Error::Serialization("CSV record has wrong arity".into()));
            }
            match &w {
                None => w = Some(record[0].to_string()),
                Some(level) if level != &record[0] => {
                    return Err(Error::Serialization(
                        "ray CSV mixes w levels; one set per file".into(),
                    ))
                }
                _ => {}
            }
            let parse_f64 = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Serialization(format!("bad number {s:?}")))
            };
            let lambda = parse_f64(&record[2])?;
            let value = parse_f64(&record[3])?;
            match rays.last_mut() {
                Some((key, ray)) if key == &record[1] => {
                    ray.lambda.push(lambda);
                    ray.values.push(value);
                }
                _ => rays.push((
                    record[1].to_string(),
                    RayCDF {
                        direction: parse_direction(&record[1])?,
                        lambda: vec![lambda],
                        values: vec![value],
                    },
                )),
            }
        }
        let w = w.ok_or_else(|| Error::Serialization("CSV holds no records".into()))?;
        Ok(RaySetCDF { w, rays: rays.into_iter().map(|(_, r)| r).collect() })
    }
}
