//! Structural summaries read off recovered choice kernels.
//!
//! Two inverse problems live here, both downstream of [`crate::deconv`]:
//!
//! * [`recover_fg`] turns the outside-option kernels of many z2 blocks into
//!   the heterogeneity CDF along the instrument rays, with monotone
//!   rearrangement on sign-definite directions.
//! * [`detect_thresholds`], [`classify_concept`] and [`recover_payoffs`] read
//!   the entry-game geometry out of a two-axis kernel: locate the outcome
//!   region boundaries, decide which solution concept generated them, and
//!   back out the payoff parameters.

mod rays;
mod thresholds;

pub use rays::{recover_fg, RayCDF, RayDiagnostics, RaySetCDF, DRAWDOWN_LIMIT};
pub use thresholds::{
    classify_concept, concept_report, detect_thresholds, recover_payoffs, ConceptReport,
    PayoffEstimates, ThresholdEstimates,
};
