//! Finite-mixture heterogeneity distributions.
//!
//! The inverse machinery treats `g` as an unknown nonparametric object; these
//! parametric families exist on the forward side only, so that integrals over
//! `g` are exact and recovered objects can be checked against a closed-form
//! oracle CDF.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::numerics::gaussian_cdf;
use crate::{Error, Result};

/// A finite mixture over vectors in R^dim with independent coordinates
/// within each Gaussian component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GMixture {
    PointMassMixture {
        atoms: Vec<Vec<f64>>,
        probs: Vec<f64>,
    },
    GaussianMixture {
        means: Vec<Vec<f64>>,
        scales: Vec<Vec<f64>>,
        probs: Vec<f64>,
    },
}

impl GMixture {
    /// Degenerate distribution at a single atom.
    pub fn point(atom: Vec<f64>) -> GMixture {
        GMixture::PointMassMixture { atoms: vec![atom], probs: vec![1.0] }
    }

    /// Independent standard normal coordinates.
    pub fn standard_normal(dim: usize) -> GMixture {
        GMixture::GaussianMixture {
            means: vec![vec![0.0; dim]],
            scales: vec![vec![1.0; dim]],
            probs: vec![1.0],
        }
    }

    pub fn probs(&self) -> &[f64] {
        match self {
            GMixture::PointMassMixture { probs, .. } => probs,
            GMixture::GaussianMixture { probs, .. } => probs,
        }
    }

    pub fn n_components(&self) -> usize {
        self.probs().len()
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let (vectors, probs): (Vec<&Vec<f64>>, &[f64]) = match self {
            GMixture::PointMassMixture { atoms, probs } => (atoms.iter().collect(), probs),
            GMixture::GaussianMixture { means, scales, probs } => {
                if means.len() != scales.len() {
                    return Err(Error::InvalidInput(
                        "gaussian mixture needs one scale vector per mean vector".into(),
                    ));
                }
                for s in scales {
                    if s.len() != dim {
                        return Err(Error::InvalidInput(format!(
                            "scale vector dimension {} does not match g dimension {dim}",
                            s.len()
                        )));
                    }
                    if s.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                        return Err(Error::InvalidInput("scales must be positive".into()));
                    }
                }
                (means.iter().collect(), probs)
            }
        };
        if vectors.is_empty() || probs.len() != vectors.len() {
            return Err(Error::InvalidInput(
                "mixture needs matching, nonempty component and probability lists".into(),
            ));
        }
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "component dimension {} does not match g dimension {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput("mixture components must be finite".into()));
            }
        }
        if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidInput("mixture probabilities must lie in [0,1]".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "mixture probabilities sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    /// Joint CDF at `r`, the oracle the ray-recovery tests compare against.
    /// Point masses count with the right-continuous convention `atom <= r`.
    pub fn cdf(&self, r: &[f64]) -> f64 {
        match self {
            GMixture::PointMassMixture { atoms, probs } => atoms
                .iter()
                .zip(probs)
                .filter(|(a, _)| a.iter().zip(r).all(|(ai, ri)| ai <= ri))
                .map(|(_, p)| p)
                .sum(),
            GMixture::GaussianMixture { means, scales, probs } => means
                .iter()
                .zip(scales)
                .zip(probs)
                .map(|((m, s), p)| {
                    p * m
                        .iter()
                        .zip(s)
                        .zip(r)
                        .map(|((mi, si), ri)| gaussian_cdf((ri - mi) / si))
                        .product::<f64>()
                })
                .sum(),
        }
    }

    /// The distribution of `-g`: the reflection that makes a negated index
    /// observationally equivalent.
    pub fn reflected(&self) -> GMixture {
        let neg = |vs: &Vec<Vec<f64>>| vs.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
        match self {
            GMixture::PointMassMixture { atoms, probs } => GMixture::PointMassMixture {
                atoms: neg(atoms),
                probs: probs.clone(),
            },
            GMixture::GaussianMixture { means, scales, probs } => GMixture::GaussianMixture {
                means: neg(means),
                scales: scales.clone(),
                probs: probs.clone(),
            },
        }
    }
}

/// Heterogeneity law per conditioning level, with a fixed dimension
/// (1 for binary, J for multinomial, 2^J - 1 for bundles).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGDistribution")]
pub struct GDistribution {
    dim: usize,
    per_w: BTreeMap<String, GMixture>,
}

#[derive(Deserialize)]
struct RawGDistribution {
    dim: usize,
    per_w: BTreeMap<String, GMixture>,
}

impl TryFrom<RawGDistribution> for GDistribution {
    type Error = Error;
    fn try_from(raw: RawGDistribution) -> Result<Self> {
        GDistribution::new(raw.dim, raw.per_w)
    }
}

impl GDistribution {
    pub fn new(dim: usize, per_w: BTreeMap<String, GMixture>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("g dimension must be positive".into()));
        }
        if per_w.is_empty() {
            return Err(Error::InvalidInput("g needs at least one w level".into()));
        }
        for mixture in per_w.values() {
            mixture.validate(dim)?;
        }
        Ok(GDistribution { dim, per_w })
    }

    /// Same mixture at every level.
    pub fn homogeneous(dim: usize, levels: &[String], mixture: GMixture) -> Result<Self> {
        let per_w = levels.iter().map(|w| (w.clone(), mixture.clone())).collect();
        Self::new(dim, per_w)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn w_levels(&self) -> impl Iterator<Item = &str> {
        self.per_w.keys().map(|s| s.as_str())
    }

    pub fn mixture(&self, w: &str) -> Result<&GMixture> {
        self.per_w
            .get(w)
            .ok_or_else(|| Error::InvalidInput(format!("g has no w level {w:?}")))
    }

    pub fn reflected(&self) -> GDistribution {
        GDistribution {
            dim: self.dim,
            per_w: self
                .per_w
                .iter()
                .map(|(w, m)| (w.clone(), m.reflected()))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn probabilities_must_sum_to_one() {
        let bad = GMixture::PointMassMixture {
            atoms: vec![vec![0.0], vec![1.0]],
            probs: vec![0.5, 0.6],
        };
        assert!(GDistribution::new(1, BTreeMap::from([("w0".into(), bad)])).is_err());
    }

    #[test]
    fn scales_must_be_positive() {
        let bad = GMixture::GaussianMixture {
            means: vec![vec![0.0]],
            scales: vec![vec![0.0]],
            probs: vec![1.0],
        };
        assert!(GDistribution::new(1, BTreeMap::from([("w0".into(), bad)])).is_err());
    }

    #[test]
    fn two_atom_cdf_has_plateaus() {
        let g = GMixture::PointMassMixture {
            atoms: vec![vec![-1.0], vec![1.0]],
            probs: vec![0.5, 0.5],
        };
        assert_eq!(g.cdf(&[-1.5]), 0.0);
        assert_eq!(g.cdf(&[-1.0]), 0.5);
        assert_eq!(g.cdf(&[0.0]), 0.5);
        assert_eq!(g.cdf(&[1.0]), 1.0);
    }

    #[test]
    fn gaussian_cdf_factorizes_over_coordinates() {
        let g = GMixture::standard_normal(2);
        assert_abs_diff_eq!(g.cdf(&[0.0, 0.0]), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(
            g.cdf(&[1.0, -0.5]),
            gaussian_cdf(1.0) * gaussian_cdf(-0.5),
            epsilon = 1e-12
        );
    }

    #[test]
    fn reflection_mirrors_the_cdf() {
        let g = GMixture::PointMassMixture {
            atoms: vec![vec![-1.0], vec![2.0]],
            probs: vec![0.3, 0.7],
        };
        let r = g.reflected();
        // P(-g <= x) = P(g >= -x) = 1 - F(-x) away from atoms.
        assert_abs_diff_eq!(r.cdf(&[0.5]), 1.0 - g.cdf(&[-0.5]), epsilon = 1e-12);
    }
}
