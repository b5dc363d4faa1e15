//! Threshold-structure test for binary choice kernels.
//!
//! A utility-maximizing binary response has kernel h(1, v) = 1{γ + v >= 0},
//! a unit step in v. This module checks whether a recovered kernel is
//! consistent with that shape and, when it is, reads off γ.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::deconv::kernel::ChoiceKernel;
use crate::model::Outcome;
use crate::{Error, Result};

/// Deviation from {0, 1} that still counts as lying on a step.
pub const STEP_BAND: f64 = 0.1;

/// Share of grid nodes allowed outside the band. A regularized inversion of
/// a true step cannot jump in one node; it crosses over a transition zone
/// whose width is set by the truncated spectrum, not by the data. The
/// allowance tolerates that zone while rejecting globally smooth kernels.
pub const MAX_VIOLATION_SHARE: f64 = 0.10;

/// Verdict of the step test for one w level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaEstimate {
    /// True when the kernel is within the band of some 0 -> 1 step.
    pub step_flag: bool,
    /// Negated crossing location; present only when the flag is set and the
    /// crossing lies on the grid.
    pub gamma: Option<f64>,
    /// Fraction of nodes outside the band at the best-fitting step.
    pub violation_share: f64,
}

/// Tests whether a one-axis binary kernel is a thresholding rule and
/// recovers the threshold when it is.
pub fn recover_gamma(h: &ChoiceKernel) -> Result<GammaEstimate> {
    if h.n_axes() != 1 {
        return Err(Error::InvalidInput(
            "threshold test needs a one-axis kernel".into(),
        ));
    }
    if h.outcomes().len() != 2 {
        return Err(Error::InvalidInput(format!(
            "threshold test needs a binary kernel, got {} outcomes",
            h.outcomes().len()
        )));
    }
    let pos1 = h.outcome_position(&Outcome::Index(1))?;
    let series = h.outcome_values(pos1);
    let grid = h.grids()[0];
    let n = grid.len();

    // Violations against the step 1{j >= k} as k sweeps 0..=n. Moving the
    // breakpoint right by one flips a single node's target, so the count is
    // updated incrementally.
    let mut violations = series
        .iter()
        .filter(|&&v| (v - 1.0).abs() > STEP_BAND)
        .count();
    let mut best = (violations, 0usize);
    for k in 1..=n {
        let moved = series[k - 1];
        if (moved - 1.0).abs() > STEP_BAND {
            violations -= 1;
        }
        if moved.abs() > STEP_BAND {
            violations += 1;
        }
        if violations < best.0 {
            best = (violations, k);
        }
    }
    let violation_share = best.0 as f64 / n as f64;
    if violation_share > MAX_VIOLATION_SHARE {
        return Ok(GammaEstimate {
            step_flag: false,
            gamma: None,
            violation_share,
        });
    }

    let first_high = series.iter().position(|&v| v >= 0.5);
    let gamma = match first_high {
        None | Some(0) => None,
        Some(j) => {
            let (lo, hi) = (series[j - 1], series[j]);
            let v_star = if lo <= STEP_BAND && hi >= 1.0 - STEP_BAND {
                // Sharp jump: the crossing is attributed to the first node
                // at which the kernel is high.
                grid.node(j)
            } else {
                grid.node(j - 1) + (0.5 - lo) / (hi - lo) * grid.spacing()
            };
            Some(-v_star)
        }
    };
    Ok(GammaEstimate {
        step_flag: true,
        gamma,
        violation_share,
    })
}

/// Runs the step test on a collection of per-w kernels and keys the
/// verdicts by w level.
pub fn recover_gamma_all<'a, I>(kernels: I) -> Result<BTreeMap<String, GammaEstimate>>
where
    I: IntoIterator<Item = &'a ChoiceKernel>,
{
    let mut out = BTreeMap::new();
    for kernel in kernels {
        let estimate = recover_gamma(kernel)?;
        if out.insert(kernel.w().to_string(), estimate).is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate kernel for w level {}",
                kernel.w()
            )));
        }
    }
    Ok(out)
}
