//! Description of a 2-player binary-action complete-information game.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::IndexModel;
use crate::{Error, Result};

/// How players resolve the game at a realized payoff state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionConcept {
    Minimax,
    Collusion,
    Rationalizability,
}

/// Payoff primitives for two players choosing y_i in {0,1}.
///
/// Player i earns (alpha0_i + beta0_i + beta1_i z_i + e_i + delta0_ij y_j) y_i
/// with independent standard normal e_i. `delta0(w)` stores
/// [delta_{1,2}, delta_{2,1}]: the effect of the opponent's entry on each
/// player's payoff. `lambda_sel` is the mixing weight on the lower-ranked
/// outcome inside a multiplicity region; it completes the DGP and carries no
/// identified content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGameStructure")]
pub struct GameStructure {
    alpha0: BTreeMap<String, [f64; 2]>,
    delta0: BTreeMap<String, [f64; 2]>,
    index: [IndexModel; 2],
    concept: SolutionConcept,
    lambda_sel: f64,
}

#[derive(Deserialize)]
struct RawGameStructure {
    alpha0: BTreeMap<String, [f64; 2]>,
    delta0: BTreeMap<String, [f64; 2]>,
    index: [IndexModel; 2],
    concept: SolutionConcept,
    lambda_sel: f64,
}

impl TryFrom<RawGameStructure> for GameStructure {
    type Error = Error;
    fn try_from(raw: RawGameStructure) -> Result<Self> {
        GameStructure::new(raw.alpha0, raw.delta0, raw.index, raw.concept, raw.lambda_sel)
    }
}

impl GameStructure {
    pub fn new(
        alpha0: BTreeMap<String, [f64; 2]>,
        delta0: BTreeMap<String, [f64; 2]>,
        index: [IndexModel; 2],
        concept: SolutionConcept,
        lambda_sel: f64,
    ) -> Result<Self> {
        if alpha0.is_empty() {
            return Err(Error::InvalidInput("game needs at least one w level".into()));
        }
        if alpha0.keys().ne(delta0.keys()) {
            return Err(Error::InvalidInput(
                "alpha0 and delta0 must be defined on the same w levels".into(),
            ));
        }
        for (w, pair) in alpha0.iter().chain(delta0.iter()) {
            if pair.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "payoff parameters at w level {w:?} must be finite"
                )));
            }
        }
        for (player, idx) in index.iter().enumerate() {
            for w in alpha0.keys() {
                if !idx.has_level(w) {
                    return Err(Error::InvalidInput(format!(
                        "player {} index is missing w level {w:?}",
                        player + 1
                    )));
                }
            }
        }
        if !(0.0..=1.0).contains(&lambda_sel) {
            return Err(Error::InvalidInput(format!(
                "lambda_sel must lie in [0, 1], got {lambda_sel}"
            )));
        }
        Ok(GameStructure { alpha0, delta0, index, concept, lambda_sel })
    }

    pub fn w_levels(&self) -> impl Iterator<Item = &str> {
        self.alpha0.keys().map(|s| s.as_str())
    }

    pub fn alpha0(&self, w: &str) -> Result<[f64; 2]> {
        self.alpha0
            .get(w)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown w level {w:?}")))
    }

    /// [delta_{1,2}, delta_{2,1}] at level w.
    pub fn delta0(&self, w: &str) -> Result<[f64; 2]> {
        self.delta0
            .get(w)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("unknown w level {w:?}")))
    }

    /// Index coefficients of player i (0-based).
    pub fn index(&self, i: usize) -> &IndexModel {
        &self.index[i]
    }

    pub fn concept(&self) -> SolutionConcept {
        self.concept
    }

    pub fn lambda_sel(&self) -> f64 {
        self.lambda_sel
    }

    /// The same game played under a different solution concept.
    pub fn with_concept(&self, concept: SolutionConcept) -> GameStructure {
        GameStructure { concept, ..self.clone() }
    }

    /// The same game with a different multiplicity selection weight.
    pub fn with_selection(&self, lambda_sel: f64) -> Result<GameStructure> {
        if !(0.0..=1.0).contains(&lambda_sel) {
            return Err(Error::InvalidInput(format!(
                "lambda_sel must lie in [0, 1], got {lambda_sel}"
            )));
        }
        Ok(GameStructure { lambda_sel, ..self.clone() })
    }
}

/// The three pairwise threshold-geometry separations at level w:
/// minimax vs collusion, minimax vs rationalizability, and rationalizability
/// vs collusion (compared by multiplicity-region aspect, cross-multiplied to
/// avoid division). All three hold whenever delta_{1,2}^2 != delta_{2,1}^2.
pub fn separation_conditions(game: &GameStructure, w: &str) -> Result<[bool; 3]> {
    let [d12, d21] = game.delta0(w)?;
    let sum = d12 + d21;
    let col_vs_mm = sum != 0.0;
    let rat_vs_mm = d12 != 0.0 || d21 != 0.0;
    let rat_vs_col = d21 * sum != sum * d12;
    Ok([col_vs_mm, rat_vs_mm, rat_vs_col])
}

/// Single-level game on "w0" with unit slopes and no index intercepts.
#[cfg(test)]
pub(crate) fn test_game(
    alpha: [f64; 2],
    delta: [f64; 2],
    concept: SolutionConcept,
    lambda_sel: f64,
) -> GameStructure {
    use crate::model::SignInfo;
    let index = IndexModel::single(0.0, 1.0, SignInfo::SignOfBeta1(1)).unwrap();
    GameStructure::new(
        BTreeMap::from([("w0".to_string(), alpha)]),
        BTreeMap::from([("w0".to_string(), delta)]),
        [index.clone(), index],
        concept,
        lambda_sel,
    )
    .unwrap()
}
