//! Entry-game geometry read off a two-axis choice kernel.
//!
//! Every supported solution concept partitions the (v1, v2) plane into
//! axis-aligned bands: on each axis an outer threshold where entry starts
//! paying when the rival stays out, and an inner one where it pays even
//! against an entering rival. Scan lines placed deep inside the rival's
//! stay-out band cross the (0,0) kernel at the outer thresholds; lines deep
//! inside the rival's enter band cross the (1,1) kernel at the inner ones.
//! The signed gap between the two thresholds on an axis is the interaction
//! effect on that axis, and its pattern across axes names the concept:
//! zero gaps mean play at the safe thresholds, equal signed gaps mean joint
//! surplus maximization with its square kink region, anything else is
//! iterated dominance with free per-player interaction terms.

use serde::Serialize;

use crate::deconv::ChoiceKernel;
use crate::games::SolutionConcept;
use crate::numerics::Grid1D;
use crate::{Error, Result};

/// Offset of the scan lines from the grid ends, in index units. Half a unit
/// keeps the line inside the band the grid margin guarantees while staying
/// clear of the edge cells, which inversion smears the most.
const SCAN_INSET: f64 = 0.5;

/// Crossing locations of the region boundaries on each latent axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdEstimates {
    /// Entry threshold against a rival staying out, from the (0,0) kernel.
    pub outer: [f64; 2],
    /// Entry threshold against an entering rival. Axis 1 is `None` when the
    /// kernel carries the (0,0)/(1,0) outcome pair, whose geometry only
    /// exposes the axis-2 boundary.
    pub inner: [Option<f64>; 2],
    /// Grid spacings of the two axes, the natural unit of crossing error.
    pub spacing: [f64; 2],
}

impl ThresholdEstimates {
    /// Signed interaction widths outer - inner per axis.
    pub fn widths(&self) -> [Option<f64>; 2] {
        [
            self.inner[0].map(|b| self.outer[0] - b),
            self.inner[1].map(|b| self.outer[1] - b),
        ]
    }

    /// Each crossing carries up to one spacing of error, so width
    /// comparisons get two.
    pub fn default_tolerance(&self) -> f64 {
        2.0 * self.spacing[0].max(self.spacing[1])
    }
}

/// Payoff quantities identified by the detected geometry. Fields are `None`
/// when the concept does not separate them: joint maximization only pins
/// down the sum of the interaction terms, and safe-threshold play only the
/// per-player composite alpha_i + min(delta_ij, 0).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoffEstimates {
    pub alpha: [Option<f64>; 2],
    pub delta: [Option<f64>; 2],
    pub delta_sum: Option<f64>,
    pub composite: [Option<f64>; 2],
}

/// Locates the region boundaries of a two-player entry game in a kernel over
/// the (v1, v2) latent plane.
///
/// The kernel must carry the stay-out outcome (0,0) plus either (1,1), which
/// exposes both axes' inner thresholds, or (1,0), which exposes only the
/// axis-2 one. The grids must span every threshold by at least one unit so
/// the scan lines land inside the outer bands.
pub fn detect_thresholds(h2: &ChoiceKernel) -> Result<ThresholdEstimates> {
    if h2.n_axes() != 2 {
        return Err(Error::InvalidInput(format!(
            "threshold detection reads a 2-axis kernel, got {} axes",
            h2.n_axes()
        )));
    }
    let position_of = |rank: usize| h2.outcomes().iter().position(|o| o.rank() == rank);
    let p00 = position_of(0).ok_or_else(|| {
        Error::Unimplemented(
            "threshold geometry is charted only for outcome pairs containing (0,0)".into(),
        )
    })?;
    let (g1, g2) = (h2.grids()[0], h2.grids()[1]);
    let row = |y: usize, j: usize| (0..g1.len()).map(|i| h2.value2(y, i, j)).collect::<Vec<_>>();
    let col = |y: usize, i: usize| (0..g2.len()).map(|j| h2.value2(y, i, j)).collect::<Vec<_>>();
    let deep = |g: &Grid1D| g.nearest(g.lo() + SCAN_INSET);
    let top = |g: &Grid1D| g.nearest(g.hi() - SCAN_INSET);

    let outer = [
        crossing_down(&g1, &row(p00, deep(&g2)), "(0,0) along axis 1")?,
        crossing_down(&g2, &col(p00, deep(&g1)), "(0,0) along axis 2")?,
    ];
    let inner = if let Some(p11) = position_of(3) {
        [
            Some(crossing_up(&g1, &row(p11, top(&g2)), "(1,1) along axis 1")?),
            Some(crossing_up(&g2, &col(p11, top(&g1)), "(1,1) along axis 2")?),
        ]
    } else if let Some(p10) = position_of(1) {
        // With player 1 locked in, (1,0) gives way to (1,1) exactly at the
        // axis-2 inner threshold; nothing in this pair moves at axis 1's.
        [None, Some(crossing_down(&g2, &col(p10, top(&g1)), "(1,0) along axis 2")?)]
    } else {
        return Err(Error::Unimplemented(
            "supported outcome pairs are (0,0)/(1,1) and (0,0)/(1,0)".into(),
        ));
    };
    Ok(ThresholdEstimates { outer, inner, spacing: [g1.spacing(), g2.spacing()] })
}

fn crossing_down(grid: &Grid1D, s: &[f64], what: &str) -> Result<f64> {
    for k in 0..s.len() - 1 {
        if s[k] >= 0.5 && s[k + 1] < 0.5 {
            let t = (s[k] - 0.5) / (s[k] - s[k + 1]);
            return Ok(grid.node(k) + t * (grid.node(k + 1) - grid.node(k)));
        }
    }
    Err(Error::NoCrossing(format!("{what}: kernel never falls through 0.5")))
}

fn crossing_up(grid: &Grid1D, s: &[f64], what: &str) -> Result<f64> {
    for k in 0..s.len() - 1 {
        if s[k] <= 0.5 && s[k + 1] > 0.5 {
            let t = (0.5 - s[k]) / (s[k + 1] - s[k]);
            return Ok(grid.node(k) + t * (grid.node(k + 1) - grid.node(k)));
        }
    }
    Err(Error::NoCrossing(format!("{what}: kernel never rises through 0.5")))
}

/// Names the solution concept behind detected thresholds.
///
/// Requires interaction magnitudes to differ across axes in the underlying
/// game; equal-magnitude opposite-sign widths fit no concept under that
/// premise and are reported as unclassifiable, as are kernels whose outcome
/// pair leaves one axis width unobserved with the other clearly nonzero.
pub fn classify_concept(
    est: &ThresholdEstimates,
    tolerance: f64,
) -> Result<SolutionConcept> {
    let [w1, w2] = est.widths();
    let d2 = w2.ok_or_else(|| {
        Error::InvalidInput("no inner threshold detected on axis 2".into())
    })?;
    match w1 {
        None => {
            if d2.abs() <= tolerance {
                Ok(SolutionConcept::Minimax)
            } else {
                Err(Error::Unclassifiable(format!(
                    "one observed width ({d2:.4}) cannot separate joint \
                     maximization from iterated dominance"
                )))
            }
        }
        Some(d1) => {
            if d1.abs() <= tolerance && d2.abs() <= tolerance {
                Ok(SolutionConcept::Minimax)
            } else if (d1 - d2).abs() <= tolerance {
                Ok(SolutionConcept::Collusion)
            } else if (d1.abs() - d2.abs()).abs() <= tolerance {
                Err(Error::Unclassifiable(format!(
                    "axis widths {d1:.4} and {d2:.4} form a square with \
                     opposite orientations, which no concept produces"
                )))
            } else {
                Ok(SolutionConcept::Rationalizability)
            }
        }
    }
}

/// Inverts the threshold formulas of the given concept.
///
/// Under iterated dominance the outer threshold is -alpha_i and the width is
/// delta_ij; under joint maximization both axes share one width, the sum of
/// the interaction terms, and must agree within tolerance when both are
/// observed; under safe-threshold play every crossing estimates the single
/// per-axis threshold -composite_i.
pub fn recover_payoffs(
    concept: SolutionConcept,
    est: &ThresholdEstimates,
    tolerance: f64,
) -> Result<PayoffEstimates> {
    let widths = est.widths();
    let none = PayoffEstimates {
        alpha: [None, None],
        delta: [None, None],
        delta_sum: None,
        composite: [None, None],
    };
    match concept {
        SolutionConcept::Minimax => {
            let c = |axis: usize| match est.inner[axis] {
                Some(b) => 0.5 * (est.outer[axis] + b),
                None => est.outer[axis],
            };
            Ok(PayoffEstimates { composite: [Some(-c(0)), Some(-c(1))], ..none })
        }
        SolutionConcept::Collusion => {
            let sum = match widths {
                [Some(d1), Some(d2)] if (d1 - d2).abs() > tolerance => {
                    return Err(Error::Unclassifiable(format!(
                        "joint-maximization widths disagree across axes: \
                         {d1:.4} vs {d2:.4}"
                    )))
                }
                [Some(d1), Some(d2)] => 0.5 * (d1 + d2),
                // The kink region is a square, so one side determines it.
                [None, Some(d2)] => d2,
                _ => {
                    return Err(Error::InvalidInput(
                        "no inner threshold detected on axis 2".into(),
                    ))
                }
            };
            Ok(PayoffEstimates {
                alpha: [Some(-est.outer[0]), Some(-est.outer[1])],
                delta_sum: Some(sum),
                ..none
            })
        }
        SolutionConcept::Rationalizability => Ok(PayoffEstimates {
            alpha: [Some(-est.outer[0]), Some(-est.outer[1])],
            delta: widths,
            delta_sum: widths[0].and_then(|d1| widths[1].map(|d2| d1 + d2)),
            ..none
        }),
    }
}

/// Everything the game-classification pipeline reports, JSON-serializable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConceptReport {
    pub concept: SolutionConcept,
    pub outer: [f64; 2],
    pub inner: [Option<f64>; 2],
    /// Signed width difference between the axes; zero for a perfectly
    /// square interaction region. `None` when axis 1 is unobserved.
    pub squareness: Option<f64>,
    pub payoffs: PayoffEstimates,
    /// Unit-of-measure caveat carried into every report.
    pub index_note: &'static str,
}

const INDEX_NOTE: &str = "thresholds and payoffs are in latent-index units; \
     the index coefficients are taken as given, not estimated here";

/// Runs detection, classification, and payoff recovery on one kernel.
///
/// `tolerance` defaults to twice the coarser grid spacing.
pub fn concept_report(h2: &ChoiceKernel, tolerance: Option<f64>) -> Result<ConceptReport> {
    let est = detect_thresholds(h2)?;
    let tol = tolerance.unwrap_or_else(|| est.default_tolerance());
    let concept = classify_concept(&est, tol)?;
    let payoffs = recover_payoffs(concept, &est, tol)?;
    let [w1, w2] = est.widths();
    Ok(ConceptReport {
        concept,
        outer: est.outer,
        inner: est.inner,
        squareness: w1.zip(w2).map(|(d1, d2)| d1 - d2),
        payoffs,
        index_note: INDEX_NOTE,
    })
}
