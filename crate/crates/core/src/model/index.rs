//! The Gaussian latent-index law and its sign normalization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which coefficient's sign is known a priori, per conditioning level `w`.
///
/// The CCP surface pins down `beta1^2` and `beta0/beta1` only; one known
/// sign resolves the remaining two-fold ambiguity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignInfo {
    SignOfBeta0(i8),
    SignOfBeta1(i8),
}

impl SignInfo {
    fn sign(self) -> i8 {
        match self {
            SignInfo::SignOfBeta0(s) | SignInfo::SignOfBeta1(s) => s,
        }
    }

    /// The same tag with the declared sign flipped.
    pub fn flipped(self) -> SignInfo {
        match self {
            SignInfo::SignOfBeta0(s) => SignInfo::SignOfBeta0(-s),
            SignInfo::SignOfBeta1(s) => SignInfo::SignOfBeta1(-s),
        }
    }
}

/// Latent-index coefficients `t = beta0(w) + beta1(w) z1 + e`, `e ~ N(0,1)`,
/// as lookup tables over a finite label set of conditioning levels.
///
/// Invariants: the three maps share the same key set, `beta1(w) != 0`
/// everywhere, and each level carries exactly one sign tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIndexModel")]
pub struct IndexModel {
    beta0: BTreeMap<String, f64>,
    beta1: BTreeMap<String, f64>,
    sign_info: BTreeMap<String, SignInfo>,
}

#[derive(Deserialize)]
struct RawIndexModel {
    beta0: BTreeMap<String, f64>,
    beta1: BTreeMap<String, f64>,
    sign_info: BTreeMap<String, SignInfo>,
}

impl TryFrom<RawIndexModel> for IndexModel {
    type Error = Error;
    fn try_from(raw: RawIndexModel) -> Result<Self> {
        IndexModel::new(raw.beta0, raw.beta1, raw.sign_info)
    }
}

impl IndexModel {
    pub fn new(
        beta0: BTreeMap<String, f64>,
        beta1: BTreeMap<String, f64>,
        sign_info: BTreeMap<String, SignInfo>,
    ) -> Result<Self> {
        if beta0.is_empty() {
            return Err(Error::InvalidInput("index model needs at least one w level".into()));
        }
        let keys: Vec<&String> = beta0.keys().collect();
        if beta1.keys().collect::<Vec<_>>() != keys || sign_info.keys().collect::<Vec<_>>() != keys
        {
            return Err(Error::InvalidInput(
                "beta0, beta1, and sign_info must be defined on the same w levels".into(),
            ));
        }
        for (w, &b) in &beta1 {
            if !b.is_finite() || b == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "beta1({w}) must be finite and nonzero, got {b}"
                )));
            }
        }
        if beta0.values().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("beta0 must be finite".into()));
        }
        for (w, si) in &sign_info {
            if si.sign().abs() != 1 {
                return Err(Error::InvalidInput(format!(
                    "sign_info({w}) must be +1 or -1"
                )));
            }
        }
        Ok(IndexModel { beta0, beta1, sign_info })
    }

    /// Convenience constructor for a single unnamed level "w0".
    pub fn single(beta0: f64, beta1: f64, sign_info: SignInfo) -> Result<Self> {
        let w = "w0".to_string();
        Self::new(
            BTreeMap::from([(w.clone(), beta0)]),
            BTreeMap::from([(w.clone(), beta1)]),
            BTreeMap::from([(w, sign_info)]),
        )
    }

    pub fn w_levels(&self) -> impl Iterator<Item = &str> {
        self.beta0.keys().map(|s| s.as_str())
    }

    pub fn has_level(&self, w: &str) -> bool {
        self.beta0.contains_key(w)
    }

    pub fn beta0(&self, w: &str) -> Result<f64> {
        self.beta0
            .get(w)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown w level {w:?}")))
    }

    pub fn beta1(&self, w: &str) -> Result<f64> {
        self.beta1
            .get(w)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown w level {w:?}")))
    }

    pub fn sign_info(&self, w: &str) -> Result<SignInfo> {
        self.sign_info
            .get(w)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown w level {w:?}")))
    }

    /// Mean index `beta0(w) + beta1(w) z1` of the standard-normal shock.
    pub fn shift(&self, w: &str, z1: f64) -> Result<f64> {
        Ok(self.beta0(w)? + self.beta1(w)? * z1)
    }

    /// The observationally equivalent model with both coefficients negated
    /// and each sign tag flipped.
    pub fn negated(&self) -> IndexModel {
        IndexModel {
            beta0: self.beta0.iter().map(|(w, b)| (w.clone(), -b)).collect(),
            beta1: self.beta1.iter().map(|(w, b)| (w.clone(), -b)).collect(),
            sign_info: self
                .sign_info
                .iter()
                .map(|(w, si)| (w.clone(), si.flipped()))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_slope() {
        assert!(IndexModel::single(0.5, 0.0, SignInfo::SignOfBeta1(1)).is_err());
    }

    #[test]
    fn rejects_mismatched_levels() {
        let r = IndexModel::new(
            BTreeMap::from([("a".into(), 0.0)]),
            BTreeMap::from([("b".into(), 1.0)]),
            BTreeMap::from([("a".into(), SignInfo::SignOfBeta1(1))]),
        );
        assert!(r.is_err());
    }

    #[test]
    fn shift_is_affine_in_z1() {
        let m = IndexModel::single(0.5, 2.0, SignInfo::SignOfBeta1(1)).unwrap();
        assert_eq!(m.shift("w0", 0.0).unwrap(), 0.5);
        assert_eq!(m.shift("w0", 1.5).unwrap(), 3.5);
    }

    #[test]
    fn sign_info_deserializes_from_tagged_json() {
        let si: SignInfo = serde_json::from_str(r#"{"sign_of_beta0": -1}"#).unwrap();
        assert_eq!(si, SignInfo::SignOfBeta0(-1));
        let m: IndexModel = serde_json::from_str(
            r#"{"beta0":{"w0":0.5},"beta1":{"w0":1.0},"sign_info":{"w0":{"sign_of_beta1":1}}}"#,
        )
        .unwrap();
        assert_eq!(m.beta1("w0").unwrap(), 1.0);
        let bad: std::result::Result<IndexModel, _> = serde_json::from_str(
            r#"{"beta0":{"w0":0.5},"beta1":{"w0":0.0},"sign_info":{"w0":{"sign_of_beta1":1}}}"#,
        );
        assert!(bad.is_err());
    }
}
