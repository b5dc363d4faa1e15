//! Seeded simulation of choice data and empirical CCP tables.
//!
//! The covariate law is a convention, not part of the model: w, the z2
//! point, and the z1 node are each drawn uniformly. Simulation exists as a
//! noisy alternative to `ccp_exact` for robustness experiments.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{CCPTable, GMixture, ModelSpec, Outcome};
use crate::numerics::Grid1D;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimRow {
    pub w_index: usize,
    pub z2_index: usize,
    pub z1_index: usize,
    pub outcome_position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimDataset {
    pub outcomes: Vec<Outcome>,
    pub w_levels: Vec<String>,
    pub z2_points: Vec<Vec<f64>>,
    pub z1_grid: Grid1D,
    pub rows: Vec<SimRow>,
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; one fresh pair per draw keeps the stream position
    // independent of call history.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random::<f64>();
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.len() - 1
}

fn draw_g<R: Rng>(rng: &mut R, mixture: &GMixture) -> Vec<f64> {
    let c = categorical(rng, mixture.probs());
    match mixture {
        GMixture::PointMassMixture { atoms, .. } => atoms[c].clone(),
        GMixture::GaussianMixture { means, scales, .. } => means[c]
            .iter()
            .zip(&scales[c])
            .map(|(m, s)| m + s * standard_normal(rng))
            .collect(),
    }
}

/// Draws `n` observations of (w, z2, z1, y). Deterministic given the seed.
pub fn simulate(spec: &ModelSpec, n: usize, seed: u64) -> Result<SimDataset> {
    if n == 0 {
        return Err(Error::InvalidInput("simulate needs at least one draw".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcomes = spec.outcomes();
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let w_index = rng.random_range(0..spec.w_levels.len());
        let z2_index = rng.random_range(0..spec.z2_points.len());
        let z1_index = rng.random_range(0..spec.z1_grid.len());
        let e1 = standard_normal(&mut rng);
        let w = &spec.w_levels[w_index];
        let g = draw_g(&mut rng, spec.g.mixture(w)?);
        let y = crate::model::choice_given_draw(
            spec,
            w,
            spec.z1_grid.node(z1_index),
            &spec.z2_points[z2_index],
            e1,
            &g,
        )?;
        let outcome_position = outcomes.iter().position(|o| o == &y).unwrap();
        rows.push(SimRow { w_index, z2_index, z1_index, outcome_position });
    }
    Ok(SimDataset {
        outcomes,
        w_levels: spec.w_levels.clone(),
        z2_points: spec.z2_points.clone(),
        z1_grid: spec.z1_grid,
        rows,
    })
}

/// Cellwise outcome frequencies. Cells with no observations keep all-zero
/// rows and are returned as (w, z2, z1) index triples; nothing is imputed.
pub fn ccp_empirical(data: &SimDataset) -> Result<(CCPTable, Vec<(usize, usize, usize)>)> {
    let n_y = data.outcomes.len();
    let (nw, n2, n1) = (data.w_levels.len(), data.z2_points.len(), data.z1_grid.len());
    let mut counts = vec![0u64; nw * n2 * n1 * n_y];
    let mut cell_totals = vec![0u64; nw * n2 * n1];
    for row in &data.rows {
        let cell = (row.w_index * n2 + row.z2_index) * n1 + row.z1_index;
        counts[cell * n_y + row.outcome_position] += 1;
        cell_totals[cell] += 1;
    }
    let mut empty = Vec::new();
    let mut values = vec![0.0; counts.len()];
    for cell in 0..cell_totals.len() {
        if cell_totals[cell] == 0 {
            let z1 = cell % n1;
            let z2 = (cell / n1) % n2;
            let w = cell / (n1 * n2);
            empty.push((w, z2, z1));
            continue;
        }
        for y in 0..n_y {
            values[cell * n_y + y] = counts[cell * n_y + y] as f64 / cell_totals[cell] as f64;
        }
    }
    let table = CCPTable::new(
        data.outcomes.clone(),
        data.w_levels.clone(),
        data.z2_points.clone(),
        data.z1_grid,
        values,
    )?;
    Ok((table, empty))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ccp_exact, Family, GDistribution, IndexModel, SignInfo};

    fn demo_spec() -> ModelSpec {
        ModelSpec::new(
            Family::Binary,
            vec!["w0".into()],
            IndexModel::single(0.0, 1.0, SignInfo::SignOfBeta1(1)).unwrap(),
            GDistribution::homogeneous(1, &["w0".into()], GMixture::standard_normal(1)).unwrap(),
            Grid1D::new(-1.0, 1.0, 5).unwrap(),
            vec![vec![1.0]],
        )
        .unwrap()
    }

    #[test]
    fn zero_draws_is_an_error() {
        assert!(simulate(&demo_spec(), 0, 7).is_err());
    }

    #[test]
    fn same_seed_reproduces_the_dataset() {
        let spec = demo_spec();
        let a = simulate(&spec, 500, 42).unwrap();
        let b = simulate(&spec, 500, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate(&spec, 500, 43).unwrap();
        assert_ne!(a.rows, c.rows);
    }

    #[test]
    fn empirical_frequencies_approach_the_exact_table() {
        let spec = demo_spec();
        let exact = ccp_exact(&spec).unwrap();
        // Errors should shrink roughly like 1/sqrt(n); allow 5 binomial
        // standard errors at p=0.5 with n/5 observations per cell.
        let mut last_err = f64::INFINITY;
        for (i, &n) in [4_000usize, 40_000, 400_000].iter().enumerate() {
            let data = simulate(&spec, n, 9).unwrap();
            let (emp, empty) = ccp_empirical(&data).unwrap();
            assert!(empty.is_empty());
            let mut worst: f64 = 0.0;
            for (w, z2, z1) in exact.cells() {
                for y in 0..2 {
                    worst = worst.max((emp.value(w, z2, z1, y) - exact.value(w, z2, z1, y)).abs());
                }
            }
            let per_cell = n as f64 / 5.0;
            assert!(
                worst < 5.0 * 0.5 / per_cell.sqrt(),
                "n={n}: worst cell error {worst}"
            );
            if i > 0 {
                assert!(worst < last_err, "error did not shrink with n");
            }
            last_err = worst;
        }
    }

    #[test]
    fn empty_cells_are_reported_not_imputed() {
        let spec = demo_spec();
        // Two draws cannot cover five z1 nodes.
        let data = simulate(&spec, 2, 1).unwrap();
        let (table, empty) = ccp_empirical(&data).unwrap();
        assert!(!empty.is_empty());
        for &(w, z2, z1) in &empty {
            assert_eq!(table.row(w, z2, z1).iter().sum::<f64>(), 0.0);
        }
    }
}
