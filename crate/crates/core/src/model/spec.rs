//! Model families, outcome labels, and the validated forward-model bundle.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{GDistribution, IndexModel};
use crate::numerics::Grid1D;
use crate::{Error, Result};

/// Outcome label: an alternative number for binary/multinomial families, a
/// 0/1 purchase vector for bundles.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Outcome {
    Index(usize),
    Bundle(Vec<u8>),
}

impl Outcome {
    /// Canonical position in the outcome set. Bundles are numbered with the
    /// first coordinate as the least significant bit, so for two goods the
    /// order is (0,0), (1,0), (0,1), (1,1). Ties in utility are broken toward
    /// the smaller rank.
    pub fn rank(&self) -> usize {
        match self {
            Outcome::Index(k) => *k,
            Outcome::Bundle(bits) => bits
                .iter()
                .enumerate()
                .map(|(j, &b)| (b as usize) << j)
                .sum(),
        }
    }

    pub fn is_outside(&self) -> bool {
        self.rank() == 0
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Index(k) => write!(f, "{k}"),
            Outcome::Bundle(bits) => {
                write!(f, "(")?;
                for (j, b) in bits.iter().enumerate() {
                    if j > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{b}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl From<Outcome> for String {
    fn from(y: Outcome) -> String {
        y.to_string()
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Outcome> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
            let bits = inner
                .split(',')
                .map(|tok| match tok.trim() {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(Error::InvalidInput(format!(
                        "bundle coordinate {other:?} is not 0 or 1"
                    ))),
                })
                .collect::<Result<Vec<u8>>>()?;
            if bits.is_empty() {
                return Err(Error::InvalidInput("empty bundle label".into()));
            }
            Ok(Outcome::Bundle(bits))
        } else {
            s.parse::<usize>()
                .map(Outcome::Index)
                .map_err(|_| Error::InvalidInput(format!("unparseable outcome label {s:?}")))
        }
    }
}

impl TryFrom<String> for Outcome {
    type Error = Error;
    fn try_from(s: String) -> Result<Outcome> {
        s.parse()
    }
}

/// Single-agent model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Binary,
    Multinomial { j: usize },
    Bundles { j: usize },
}

impl Family {
    /// Number of inside alternatives (goods for bundles).
    pub fn n_goods(&self) -> usize {
        match self {
            Family::Binary => 1,
            Family::Multinomial { j } | Family::Bundles { j } => *j,
        }
    }

    /// Dimension of a z2 point.
    pub fn z2_dim(&self) -> usize {
        self.n_goods()
    }

    /// Dimension of the heterogeneity vector g: one coordinate per
    /// non-outside outcome.
    pub fn g_dim(&self) -> usize {
        match self {
            Family::Binary => 1,
            Family::Multinomial { j } => *j,
            Family::Bundles { j } => (1usize << j) - 1,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Family::Binary => Ok(()),
            Family::Multinomial { j } => {
                if *j == 0 {
                    Err(Error::InvalidInput("multinomial needs at least one inside good".into()))
                } else {
                    Ok(())
                }
            }
            Family::Bundles { j } => {
                if *j == 0 {
                    Err(Error::InvalidInput("bundles needs at least one good".into()))
                } else if *j > 16 {
                    Err(Error::InvalidInput(format!(
                        "bundles over {j} goods would enumerate 2^{j} outcomes"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// All outcome labels of a family in canonical rank order; position 0 is the
/// outside option.
pub fn outcome_set(family: Family) -> Vec<Outcome> {
    match family {
        Family::Binary => vec![Outcome::Index(0), Outcome::Index(1)],
        Family::Multinomial { j } => (0..=j).map(Outcome::Index).collect(),
        Family::Bundles { j } => (0..(1usize << j))
            .map(|r| Outcome::Bundle((0..j).map(|jj| ((r >> jj) & 1) as u8).collect()))
            .collect(),
    }
}

/// Complete forward model: family, index law, heterogeneity, and covariate
/// supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelSpec")]
pub struct ModelSpec {
    pub family: Family,
    pub w_levels: Vec<String>,
    pub index: IndexModel,
    pub g: GDistribution,
    pub z1_grid: Grid1D,
    pub z2_points: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawModelSpec {
    family: Family,
    w_levels: Vec<String>,
    index: IndexModel,
    g: GDistribution,
    z1_grid: Grid1D,
    z2_points: Vec<Vec<f64>>,
}

impl TryFrom<RawModelSpec> for ModelSpec {
    type Error = Error;
    fn try_from(raw: RawModelSpec) -> Result<Self> {
        ModelSpec::new(raw.family, raw.w_levels, raw.index, raw.g, raw.z1_grid, raw.z2_points)
    }
}

impl ModelSpec {
    pub fn new(
        family: Family,
        w_levels: Vec<String>,
        index: IndexModel,
        g: GDistribution,
        z1_grid: Grid1D,
        z2_points: Vec<Vec<f64>>,
    ) -> Result<Self> {
        family.validate()?;
        if w_levels.is_empty() {
            return Err(Error::InvalidInput("w_levels must be nonempty".into()));
        }
        for (i, w) in w_levels.iter().enumerate() {
            if w_levels[..i].contains(w) {
                return Err(Error::InvalidInput(format!("duplicate w level {w:?}")));
            }
            if !index.has_level(w) {
                return Err(Error::InvalidInput(format!("index model lacks w level {w:?}")));
            }
            if g.mixture(w).is_err() {
                return Err(Error::InvalidInput(format!("g lacks w level {w:?}")));
            }
        }
        if g.dim() != family.g_dim() {
            return Err(Error::InvalidInput(format!(
                "g dimension {} does not match the family's {}",
                g.dim(),
                family.g_dim()
            )));
        }
        if z2_points.is_empty() {
            return Err(Error::InvalidInput("z2_points must be nonempty".into()));
        }
        let d = family.z2_dim();
        for z2 in &z2_points {
            if z2.len() != d {
                return Err(Error::InvalidInput(format!(
                    "z2 point has dimension {}, family needs {d}",
                    z2.len()
                )));
            }
            if z2.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("z2 points must be finite".into()));
            }
            if z2.iter().all(|&v| v == 0.0) {
                return Err(Error::InvalidInput(
                    "z2 = 0 puts no excluded variation into utilities".into(),
                ));
            }
        }
        if d > 1 {
            let has_equal = z2_points
                .iter()
                .any(|z2| z2[0] != 0.0 && z2.iter().all(|&v| v == z2[0]));
            if !has_equal {
                return Err(Error::InvalidInput(
                    "need at least one z2 point with all coordinates equal and nonzero".into(),
                ));
            }
        }
        Ok(ModelSpec { family, w_levels, index, g, z1_grid, z2_points })
    }

    pub fn outcomes(&self) -> Vec<Outcome> {
        outcome_set(self.family)
    }

    /// The companion model with negated index coefficients and reflected
    /// heterogeneity. For the binary family it generates the same choice
    /// distribution with the outcome labels swapped: negating the index
    /// mirrors which side of zero the inside utility lands on.
    pub fn sign_flipped(&self) -> Result<ModelSpec> {
        ModelSpec::new(
            self.family,
            self.w_levels.clone(),
            self.index.negated(),
            self.g.reflected(),
            self.z1_grid,
            self.z2_points.clone(),
        )
    }

    /// Index coefficient on the latent index t, per outcome in rank order.
    /// Position 0 (the outside option) has slope 0; multinomial alternatives
    /// take their own z2 coordinate; a bundle takes the sum over its goods.
    pub fn outcome_slopes(&self, z2: &[f64]) -> Vec<f64> {
        match self.family {
            Family::Binary | Family::Multinomial { .. } => {
                std::iter::once(0.0).chain(z2.iter().copied()).collect()
            }
            Family::Bundles { j } => (0..(1usize << j))
                .map(|r| (0..j).filter(|jj| (r >> jj) & 1 == 1).map(|jj| z2[jj]).sum())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GMixture, SignInfo};

    fn any_index() -> IndexModel {
        IndexModel::single(0.0, 1.0, SignInfo::SignOfBeta1(1)).unwrap()
    }

    #[test]
    fn outcome_sets_enumerate_in_rank_order() {
        assert_eq!(
            outcome_set(Family::Multinomial { j: 2 }),
            vec![Outcome::Index(0), Outcome::Index(1), Outcome::Index(2)]
        );
        let bundles = outcome_set(Family::Bundles { j: 2 });
        let labels: Vec<String> = bundles.iter().map(|y| y.to_string()).collect();
        assert_eq!(labels, ["(0,0)", "(1,0)", "(0,1)", "(1,1)"]);
        for (pos, y) in bundles.iter().enumerate() {
            assert_eq!(y.rank(), pos);
        }
    }

    #[test]
    fn outcome_labels_round_trip_through_strings() {
        for y in outcome_set(Family::Bundles { j: 3 })
            .into_iter()
            .chain(outcome_set(Family::Multinomial { j: 4 }))
        {
            let parsed: Outcome = y.to_string().parse().unwrap();
            assert_eq!(parsed, y);
        }
        assert!("(2,0)".parse::<Outcome>().is_err());
        assert!("x1".parse::<Outcome>().is_err());
    }

    #[test]
    fn bundle_slopes_sum_over_goods() {
        let g = GDistribution::homogeneous(
            3,
            &["w0".into()],
            GMixture::point(vec![0.0, 0.0, 0.0]),
        )
        .unwrap();
        let spec = ModelSpec::new(
            Family::Bundles { j: 2 },
            vec!["w0".into()],
            any_index(),
            g,
            Grid1D::new(-1.0, 1.0, 5).unwrap(),
            vec![vec![1.0, 1.0], vec![2.0, 0.5]],
        )
        .unwrap();
        assert_eq!(spec.outcome_slopes(&[2.0, 0.5]), vec![0.0, 2.0, 0.5, 2.5]);
    }

    #[test]
    fn multinomial_without_equal_coordinate_point_is_rejected() {
        let g = GDistribution::homogeneous(2, &["w0".into()], GMixture::standard_normal(2))
            .unwrap();
        let err = ModelSpec::new(
            Family::Multinomial { j: 2 },
            vec!["w0".into()],
            any_index(),
            g,
            Grid1D::new(-1.0, 1.0, 5).unwrap(),
            vec![vec![1.0, 2.0]],
        );
        assert!(err.is_err());
    }

    #[test]
    fn zero_z2_point_is_rejected() {
        let g = GDistribution::homogeneous(1, &["w0".into()], GMixture::standard_normal(1))
            .unwrap();
        let err = ModelSpec::new(
            Family::Binary,
            vec!["w0".into()],
            any_index(),
            g,
            Grid1D::new(-1.0, 1.0, 5).unwrap(),
            vec![vec![0.0]],
        );
        assert!(err.is_err());
    }
}
