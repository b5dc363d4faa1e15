//! Outcome regions in the payoff-state plane v = (v_1, v_2).
//!
//! Every solution concept partitions the plane with one low and one high
//! threshold per axis (equal for minimax), yielding up to nine rectangular
//! cells. Cells carry a single outcome except for two central cases: the
//! collusion cell split by a surplus-tie diagonal, and the rationalizability
//! multiplicity rectangle where two pure equilibria coexist and a selection
//! weight decides between them.
//!
//! Threshold algebra per concept, writing d = [delta_{1,2}, delta_{2,1}]:
//! minimax enters on v_i > -alpha_i - min(d_i, 0); collusion compares total
//! surplus with corner thresholds a_i = -alpha_i and b_i = a_i - (d_1 + d_2);
//! rationalizability iterates strict dominance with entry certain above
//! bt_i = -alpha_i - d_i and impossible below at_i = -alpha_i.

use serde::Serialize;

use crate::games::structure::{GameStructure, SolutionConcept};
use crate::model::Outcome;
use crate::numerics::Grid1D;
use crate::Result;

/// The four joint actions in canonical rank order.
pub fn game_outcomes() -> Vec<Outcome> {
    vec![
        Outcome::Bundle(vec![0, 0]),
        Outcome::Bundle(vec![1, 0]),
        Outcome::Bundle(vec![0, 1]),
        Outcome::Bundle(vec![1, 1]),
    ]
}

fn outcome(y1: u8, y2: u8) -> Outcome {
    Outcome::Bundle(vec![y1, y2])
}

/// Label of one rectangular cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellLabel {
    Pure(Outcome),
    /// Split by the surplus-tie diagonal of the collusion concept.
    Split(DiagonalSplit),
    /// The rationalizability multiplicity rectangle; see
    /// [`RegionMap::multiplicity`].
    Mixed,
}

/// A diagonal line across the central cell separating two outcomes.
///
/// The main diagonal joins the (low, low) and (high, high) corners; the
/// anti-diagonal joins (low, high) and (high, low). `below` is the label on
/// the side containing the (high, low) corner for the main diagonal and the
/// (low, low) corner for the anti-diagonal; points on the line take `below`,
/// which is always the smaller-ranked outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalSplit {
    pub along_main_diagonal: bool,
    pub below: Outcome,
    pub above: Outcome,
}

/// Rectangle where two pure equilibria coexist. `first` (the smaller rank)
/// receives the selection weight, `second` the complement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicityBox {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub first: Outcome,
    pub second: Outcome,
}

/// Partition of the v-plane induced by a game at one w level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMap {
    concept: SolutionConcept,
    /// (low, high) per axis; equal under minimax and whenever the relevant
    /// interaction vanishes.
    thresholds: [(f64, f64); 2],
    /// labels[y_band][x_band] with bands ordered below / between / above.
    labels: [[CellLabel; 3]; 3],
    multiplicity: Option<MultiplicityBox>,
}

/// Model prediction at a single point of the v-plane.
#[derive(Debug, Clone, PartialEq)]
pub enum PointPrediction {
    Point(Outcome),
    /// Two coexisting equilibria; the selection weight rides on `first`.
    Mixture { first: Outcome, second: Outcome },
}

/// Best response to a known entry decision; exact payoff ties keep both
/// actions alive.
fn singleton_response(enter_payoff: f64) -> [bool; 2] {
    if enter_payoff > 0.0 {
        [false, true]
    } else if enter_payoff < 0.0 {
        [true, false]
    } else {
        [true, true]
    }
}

/// One strict-dominance pass for a player with entering-alone payoff `p`,
/// opponent-entry shift `d`, and the opponent's surviving set `opp`
/// ([keep 0, keep 1]).
fn dominance_step(p: f64, d: f64, opp: [bool; 2]) -> [bool; 2] {
    match opp {
        [true, true] => {
            if p + d.min(0.0) > 0.0 {
                [false, true]
            } else if p + d.max(0.0) < 0.0 {
                [true, false]
            } else {
                [true, true]
            }
        }
        [true, false] => singleton_response(p),
        [false, true] => singleton_response(p + d),
        [false, false] => unreachable!("a strategy set never empties"),
    }
}

/// Iterated strict dominance; Some(profile) when a unique joint action
/// survives, None when nothing is eliminated.
fn iterate_dominance(p1: f64, p2: f64, d1: f64, d2: f64) -> Option<(u8, u8)> {
    let mut s1 = [true, true];
    let mut s2 = [true, true];
    loop {
        let n1 = dominance_step(p1, d1, s2);
        let n2 = dominance_step(p2, d2, n1);
        if n1 == s1 && n2 == s2 {
            break;
        }
        s1 = n1;
        s2 = n2;
    }
    match (s1, s2) {
        ([a, b], [c, d]) if a != b && c != d => Some((u8::from(b), u8::from(d))),
        _ => None,
    }
}

/// Total-surplus maximizer in rank order (ties to fewer entrants, then to
/// the lower rank).
fn collusion_outcome(p1: f64, p2: f64, d: f64) -> Outcome {
    let surplus = [0.0, p1, p2, p1 + p2 + d];
    let mut best = 0;
    for (k, &s) in surplus.iter().enumerate().skip(1) {
        if s > surplus[best] {
            best = k;
        }
    }
    outcome((best & 1) as u8, (best >> 1) as u8)
}

fn minimax_outcome(p1: f64, p2: f64, d1: f64, d2: f64) -> Outcome {
    outcome(
        u8::from(p1 + d1.min(0.0) > 0.0),
        u8::from(p2 + d2.min(0.0) > 0.0),
    )
}

fn sorted(a: f64, b: f64) -> (f64, f64) {
    if a <= b { (a, b) } else { (b, a) }
}

/// Geometry of the outcome partition at level w.
pub fn region_map(game: &GameStructure, w: &str) -> Result<RegionMap> {
    let [alpha1, alpha2] = game.alpha0(w)?;
    let [d1, d2] = game.delta0(w)?;
    let concept = game.concept();

    let (raw1, raw2) = match concept {
        SolutionConcept::Minimax => {
            let c1 = -alpha1 - d1.min(0.0);
            let c2 = -alpha2 - d2.min(0.0);
            ((c1, c1), (c2, c2))
        }
        SolutionConcept::Collusion => {
            let sum = d1 + d2;
            ((-alpha1, -alpha1 - sum), (-alpha2, -alpha2 - sum))
        }
        SolutionConcept::Rationalizability => {
            ((-alpha1, -alpha1 - d1), (-alpha2, -alpha2 - d2))
        }
    };
    let tx = sorted(raw1.0, raw1.1);
    let ty = sorted(raw2.0, raw2.1);

    // Interior representative per band; empty central bands reuse the low
    // side so degenerate games inherit the quadrant labels.
    let rep = |(lo, hi): (f64, f64)| {
        [lo - 1.0, if lo < hi { 0.5 * (lo + hi) } else { lo - 1.0 }, hi + 1.0]
    };
    let rx = rep(tx);
    let ry = rep(ty);

    let mut multiplicity = None;
    let central_nonempty = tx.0 < tx.1 && ty.0 < ty.1;
    let mut label_at = |xb: usize, yb: usize| -> CellLabel {
        let v1 = rx[xb];
        let v2 = ry[yb];
        let p1 = v1 + alpha1;
        let p2 = v2 + alpha2;
        let central = xb == 1 && yb == 1 && central_nonempty;
        match concept {
            SolutionConcept::Minimax => CellLabel::Pure(minimax_outcome(p1, p2, d1, d2)),
            SolutionConcept::Collusion => {
                if central {
                    let sum = d1 + d2;
                    let (below, above) = if sum < 0.0 {
                        (outcome(1, 0), outcome(0, 1))
                    } else {
                        (outcome(0, 0), outcome(1, 1))
                    };
                    CellLabel::Split(DiagonalSplit {
                        along_main_diagonal: sum < 0.0,
                        below,
                        above,
                    })
                } else {
                    CellLabel::Pure(collusion_outcome(p1, p2, d1 + d2))
                }
            }
            SolutionConcept::Rationalizability => match iterate_dominance(p1, p2, d1, d2) {
                Some((y1, y2)) => CellLabel::Pure(outcome(y1, y2)),
                None => {
                    if d1 * d2 > 0.0 {
                        let (first, second) = if d1 < 0.0 {
                            (outcome(1, 0), outcome(0, 1))
                        } else {
                            (outcome(0, 0), outcome(1, 1))
                        };
                        multiplicity = Some(MultiplicityBox {
                            x: tx,
                            y: ty,
                            first,
                            second,
                        });
                        CellLabel::Mixed
                    } else {
                        // Opposite-sign interactions leave no pure
                        // equilibrium in the central cell; complete the
                        // model with the profile where the player averse
                        // to company enters alone.
                        CellLabel::Pure(if d1 < 0.0 { outcome(1, 0) } else { outcome(0, 1) })
                    }
                }
            },
        }
    };

    let labels = [0, 1, 2].map(|yb| [0, 1, 2].map(|xb| label_at(xb, yb)));
    Ok(RegionMap { concept, thresholds: [tx, ty], labels, multiplicity })
}

fn bands(v: f64, (lo, hi): (f64, f64)) -> Vec<usize> {
    if lo == hi {
        if v < lo {
            vec![0]
        } else if v > hi {
            vec![2]
        } else {
            vec![0, 1, 2]
        }
    } else if v < lo {
        vec![0]
    } else if v == lo {
        vec![0, 1]
    } else if v < hi {
        vec![1]
    } else if v == hi {
        vec![1, 2]
    } else {
        vec![2]
    }
}

impl RegionMap {
    pub fn concept(&self) -> SolutionConcept {
        self.concept
    }

    /// (low, high) threshold pair of player axis i (0-based).
    pub fn thresholds(&self, i: usize) -> (f64, f64) {
        self.thresholds[i]
    }

    pub fn multiplicity(&self) -> Option<&MultiplicityBox> {
        self.multiplicity.as_ref()
    }

    pub fn labels(&self) -> &[[CellLabel; 3]; 3] {
        &self.labels
    }

    fn split_side<'a>(&self, split: &'a DiagonalSplit, v1: f64, v2: f64) -> &'a Outcome {
        let (lo1, _) = self.thresholds[0];
        let (lo2, hi2) = self.thresholds[1];
        let above = if split.along_main_diagonal {
            v2 - lo2 > v1 - lo1
        } else {
            (v1 - lo1) + (v2 - lo2) > hi2 - lo2
        };
        if above { &split.above } else { &split.below }
    }

    /// Prediction at a point. Boundary points between cells resolve to the
    /// smallest-ranked adjacent outcome; a mixture only arises strictly
    /// inside the multiplicity rectangle.
    pub fn classify(&self, v1: f64, v2: f64) -> PointPrediction {
        let xb = bands(v1, self.thresholds[0]);
        let yb = bands(v2, self.thresholds[1]);
        if xb.len() == 1 && yb.len() == 1 {
            match &self.labels[yb[0]][xb[0]] {
                CellLabel::Pure(o) => PointPrediction::Point(o.clone()),
                CellLabel::Split(s) => {
                    PointPrediction::Point(self.split_side(s, v1, v2).clone())
                }
                CellLabel::Mixed => {
                    let m = self.multiplicity.as_ref().expect("mixed cell has a box");
                    PointPrediction::Mixture {
                        first: m.first.clone(),
                        second: m.second.clone(),
                    }
                }
            }
        } else {
            let mut best: Option<Outcome> = None;
            for &y in &yb {
                for &x in &xb {
                    let candidate = match &self.labels[y][x] {
                        CellLabel::Pure(o) => o.clone(),
                        CellLabel::Split(s) => self.split_side(s, v1, v2).clone(),
                        CellLabel::Mixed => self
                            .multiplicity
                            .as_ref()
                            .expect("mixed cell has a box")
                            .first
                            .clone(),
                    };
                    if best.as_ref().is_none_or(|b| candidate.rank() < b.rank()) {
                        best = Some(candidate);
                    }
                }
            }
            PointPrediction::Point(best.expect("band sets are nonempty"))
        }
    }

    /// Point grid of labels for plotting: one `v1,v2,label` row per node,
    /// mixtures rendered as `first|second`.
    pub fn raster_csv(&self, grid1: &Grid1D, grid2: &Grid1D) -> String {
        let mut out = String::from("v1,v2,label\n");
        for i in 0..grid1.len() {
            for j in 0..grid2.len() {
                let v1 = grid1.node(i);
                let v2 = grid2.node(j);
                let label = match self.classify(v1, v2) {
                    PointPrediction::Point(o) => o.to_string(),
                    PointPrediction::Mixture { first, second } => {
                        format!("{first}|{second}")
                    }
                };
                out.push_str(&format!("{v1},{v2},{label}\n"));
            }
        }
        out
    }
}

/// Outcome distribution over the four joint actions, in rank order, at one
/// point of the v-plane.
pub fn outcome_at(game: &GameStructure, w: &str, v1: f64, v2: f64) -> Result<[f64; 4]> {
    Ok(region_map(game, w)?.prediction_weights(game.lambda_sel(), v1, v2))
}

impl RegionMap {
    pub(crate) fn prediction_weights(&self, lambda_sel: f64, v1: f64, v2: f64) -> [f64; 4] {
        let mut p = [0.0; 4];
        match self.classify(v1, v2) {
            PointPrediction::Point(o) => p[o.rank()] = 1.0,
            PointPrediction::Mixture { first, second } => {
                p[first.rank()] = lambda_sel;
                p[second.rank()] = 1.0 - lambda_sel;
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::structure::test_game;
    use proptest::prelude::*;

    fn rationalizability(alpha: [f64; 2], delta: [f64; 2]) -> GameStructure {
        test_game(alpha, delta, SolutionConcept::Rationalizability, 0.3)
    }

    const SPEC_ALPHA: [f64; 2] = [0.5, -0.25];
    const SPEC_DELTA: [f64; 2] = [-1.0, -0.5];

    #[test]
    fn worked_example_thresholds_for_all_concepts() {
        let rat = region_map(&rationalizability(SPEC_ALPHA, SPEC_DELTA), "w0").unwrap();
        assert_eq!(rat.thresholds(0), (-0.5, 0.5));
        assert_eq!(rat.thresholds(1), (0.25, 0.75));
        let m = rat.multiplicity().expect("like-sign interactions coexist");
        assert_eq!(m.x, (-0.5, 0.5));
        assert_eq!(m.y, (0.25, 0.75));
        assert_eq!((m.first.clone(), m.second.clone()), (outcome(1, 0), outcome(0, 1)));

        let mm = test_game(SPEC_ALPHA, SPEC_DELTA, SolutionConcept::Minimax, 0.0);
        let mm = region_map(&mm, "w0").unwrap();
        assert_eq!(mm.thresholds(0), (0.5, 0.5));
        assert_eq!(mm.thresholds(1), (0.75, 0.75));
        assert!(mm.multiplicity().is_none());

        let col = test_game(SPEC_ALPHA, SPEC_DELTA, SolutionConcept::Collusion, 0.0);
        let col = region_map(&col, "w0").unwrap();
        assert_eq!(col.thresholds(0), (-0.5, 1.0));
        assert_eq!(col.thresholds(1), (0.25, 1.75));
        assert!(col.multiplicity().is_none());
    }

    #[test]
    fn deep_corners_are_unanimous() {
        for concept in [
            SolutionConcept::Minimax,
            SolutionConcept::Collusion,
            SolutionConcept::Rationalizability,
        ] {
            let g = test_game(SPEC_ALPHA, SPEC_DELTA, concept, 0.3);
            assert_eq!(
                outcome_at(&g, "w0", -10.0, -10.0).unwrap(),
                [1.0, 0.0, 0.0, 0.0],
                "{concept:?}"
            );
            assert_eq!(
                outcome_at(&g, "w0", 10.0, 10.0).unwrap(),
                [0.0, 0.0, 0.0, 1.0],
                "{concept:?}"
            );
        }
    }

    #[test]
    fn selection_weight_splits_the_multiplicity_rectangle() {
        let g = rationalizability(SPEC_ALPHA, SPEC_DELTA);
        assert_eq!(outcome_at(&g, "w0", 0.0, 0.5).unwrap(), [0.0, 0.3, 0.7, 0.0]);
        let g = g.with_selection(1.0).unwrap();
        assert_eq!(outcome_at(&g, "w0", 0.0, 0.5).unwrap(), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn coordination_games_mix_the_diagonal_outcomes() {
        let g = rationalizability([0.0, 0.0], [0.8, 0.3]);
        let map = region_map(&g, "w0").unwrap();
        let m = map.multiplicity().unwrap();
        assert_eq!(m.x, (-0.8, 0.0));
        assert_eq!(m.y, (-0.3, 0.0));
        assert_eq!((m.first.clone(), m.second.clone()), (outcome(0, 0), outcome(1, 1)));
        assert_eq!(outcome_at(&g, "w0", -0.4, -0.15).unwrap(), [0.3, 0.0, 0.0, 0.7]);
    }

    #[test]
    fn opposite_sign_interactions_have_no_multiplicity() {
        let g = rationalizability([0.0, 0.0], [0.8, -0.3]);
        let map = region_map(&g, "w0").unwrap();
        assert!(map.multiplicity().is_none());
        // Player 2 avoids company and enters alone in the central cell.
        assert_eq!(outcome_at(&g, "w0", -0.4, 0.15).unwrap(), [0.0, 0.0, 1.0, 0.0]);
        let g = rationalizability([0.0, 0.0], [-0.8, 0.3]);
        assert_eq!(outcome_at(&g, "w0", 0.4, -0.15).unwrap(), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn boundary_points_take_the_smallest_adjacent_rank() {
        let mm = test_game(SPEC_ALPHA, SPEC_DELTA, SolutionConcept::Minimax, 0.0);
        assert_eq!(outcome_at(&mm, "w0", 0.5, 0.75).unwrap(), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(outcome_at(&mm, "w0", 0.5, 10.0).unwrap(), [0.0, 0.0, 1.0, 0.0]);
        let rat = rationalizability(SPEC_ALPHA, SPEC_DELTA);
        // Left edge of the multiplicity rectangle adjoins the (0,1) strip;
        // the rectangle's lower-ranked member (1,0) still wins.
        assert_eq!(outcome_at(&rat, "w0", -0.5, 0.5).unwrap(), [0.0, 1.0, 0.0, 0.0]);
        // The corner where all four cells meet resolves to (0,0).
        assert_eq!(outcome_at(&rat, "w0", -0.5, 0.25).unwrap(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn collusion_split_cell_sides_follow_the_surplus_tie() {
        let g = test_game([0.0, 0.0], [-1.0, -1.0], SolutionConcept::Collusion, 0.0);
        let map = region_map(&g, "w0").unwrap();
        assert_eq!(map.thresholds(0), (0.0, 2.0));
        match &map.labels()[1][1] {
            CellLabel::Split(s) => {
                assert!(s.along_main_diagonal);
                assert_eq!(s.below, outcome(1, 0));
                assert_eq!(s.above, outcome(0, 1));
            }
            other => panic!("expected split central cell, got {other:?}"),
        }
        assert_eq!(outcome_at(&g, "w0", 1.5, 0.5).unwrap(), [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(outcome_at(&g, "w0", 0.5, 1.5).unwrap(), [0.0, 0.0, 1.0, 0.0]);
        // On the tie line both single-entrant outcomes earn the same total
        // surplus; the lower rank wins.
        assert_eq!(outcome_at(&g, "w0", 1.0, 1.0).unwrap(), [0.0, 1.0, 0.0, 0.0]);

        let g = test_game([0.0, 0.0], [0.7, 0.5], SolutionConcept::Collusion, 0.0);
        let map = region_map(&g, "w0").unwrap();
        match &map.labels()[1][1] {
            CellLabel::Split(s) => {
                assert!(!s.along_main_diagonal);
                assert_eq!(s.below, outcome(0, 0));
                assert_eq!(s.above, outcome(1, 1));
            }
            other => panic!("expected split central cell, got {other:?}"),
        }
        assert_eq!(outcome_at(&g, "w0", -0.9, -0.9).unwrap(), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(outcome_at(&g, "w0", -0.3, -0.3).unwrap(), [0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn raster_marks_mixture_cells() {
        let map = region_map(&rationalizability(SPEC_ALPHA, SPEC_DELTA), "w0").unwrap();
        let g1 = Grid1D::new(-2.0, 2.0, 5).unwrap();
        let g2 = Grid1D::new(-1.0, 1.0, 5).unwrap();
        let csv = map.raster_csv(&g1, &g2);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("v1,v2,label"));
        assert!(csv.contains("0,0.5,(1,0)|(0,1)"));
        assert!(csv.contains("-2,-1,(0,0)"));
        assert_eq!(csv.lines().count(), 26);
    }

    #[test]
    fn json_serialization_exposes_thresholds_and_labels() {
        let map = region_map(&rationalizability(SPEC_ALPHA, SPEC_DELTA), "w0").unwrap();
        let value: serde_json::Value = serde_json::to_value(&map).unwrap();
        assert_eq!(value["thresholds"][0][1], 0.5);
        assert_eq!(value["labels"][0][0]["pure"], "(0,0)");
        assert_eq!(value["multiplicity"]["first"], "(1,0)");
    }

    /// Independent total-surplus maximizer, written directly from the
    /// definition of collusive behavior; ties go to the earlier rank.
    fn collusion_oracle(p1: f64, p2: f64, d: f64) -> usize {
        let s = [0.0, p1, p2, p1 + p2 + d];
        (1..4).fold(0, |best, k| if s[k] > s[best] { k } else { best })
    }

    /// Independent iterated strict dominance over explicit strategy sets.
    fn dominance_oracle(p: [f64; 2], d: [f64; 2]) -> (Vec<u8>, Vec<u8>) {
        let mut sets: [Vec<u8>; 2] = [vec![0, 1], vec![0, 1]];
        loop {
            let mut changed = false;
            for i in 0..2 {
                let j = 1 - i;
                let payoff = |own: u8, opp: u8| {
                    if own == 1 { p[i] + d[i] * opp as f64 } else { 0.0 }
                };
                let dominated: Vec<u8> = sets[i]
                    .iter()
                    .copied()
                    .filter(|&own| {
                        sets[i].iter().any(|&other| {
                            other != own
                                && sets[j]
                                    .iter()
                                    .all(|&opp| payoff(other, opp) > payoff(own, opp))
                        })
                    })
                    .collect();
                if !dominated.is_empty() {
                    sets[i].retain(|a| !dominated.contains(a));
                    changed = true;
                }
            }
            if !changed {
                let [s1, s2] = sets;
                return (s1, s2);
            }
        }
    }

    proptest! {
        #[test]
        fn collusion_prediction_maximizes_total_surplus(
            a1 in -1.0f64..1.0,
            a2 in -1.0f64..1.0,
            d1 in -1.2f64..1.2,
            d2 in -1.2f64..1.2,
            v1 in -3.0f64..3.0,
            v2 in -3.0f64..3.0,
        ) {
            let g = test_game([a1, a2], [d1, d2], SolutionConcept::Collusion, 0.0);
            let p = outcome_at(&g, "w0", v1, v2).unwrap();
            let want = collusion_oracle(v1 + a1, v2 + a2, d1 + d2);
            prop_assert_eq!(p[want], 1.0, "distribution {:?}", p);
        }

        #[test]
        fn rationalizability_agrees_with_iterated_dominance(
            a1 in -1.0f64..1.0,
            a2 in -1.0f64..1.0,
            d1 in -1.2f64..1.2,
            d2 in -1.2f64..1.2,
            v1 in -3.0f64..3.0,
            v2 in -3.0f64..3.0,
        ) {
            let g = test_game([a1, a2], [d1, d2], SolutionConcept::Rationalizability, 0.3);
            let p = outcome_at(&g, "w0", v1, v2).unwrap();
            let (s1, s2) = dominance_oracle([v1 + a1, v2 + a2], [d1, d2]);
            if s1.len() == 1 && s2.len() == 1 {
                let rank = outcome(s1[0], s2[0]).rank();
                prop_assert_eq!(p[rank], 1.0, "distribution {:?}", p);
            } else {
                prop_assert_eq!(s1.len() * s2.len(), 4, "partial elimination cannot rest");
                let support: Vec<usize> =
                    (0..4).filter(|&k| p[k] > 0.0).collect();
                if d1 * d2 > 0.0 {
                    let want = if d1 < 0.0 { vec![1, 2] } else { vec![0, 3] };
                    prop_assert_eq!(support, want, "mixture support");
                } else {
                    prop_assert_eq!(support.len(), 1, "completion is deterministic");
                }
            }
        }

        #[test]
        fn minimax_play_is_threshold_crossing_per_player(
            a1 in -1.0f64..1.0,
            d1 in -1.2f64..1.2,
            d2 in -1.2f64..1.2,
            v1 in -3.0f64..3.0,
            v2 in -3.0f64..3.0,
        ) {
            let g = test_game([a1, -a1], [d1, d2], SolutionConcept::Minimax, 0.0);
            let p = outcome_at(&g, "w0", v1, v2).unwrap();
            let y1 = u8::from(v1 > -a1 - d1.min(0.0));
            let y2 = u8::from(v2 > a1 - d2.min(0.0));
            prop_assert_eq!(p[outcome(y1, y2).rank()], 1.0);
        }
    }
}
