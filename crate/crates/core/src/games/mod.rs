//! Two-player binary entry games under three solution concepts.
//!
//! A game assigns each player i a payoff (alpha_i + v_i + delta_ij y_j) y_i
//! with latent v_i = beta0_i + beta1_i z_i + e_i. The concept (minimax play,
//! collusion, rationalizability) maps the pair (v_1, v_2) to an outcome
//! distribution over the four joint actions; [`region_map`] describes the
//! induced partition of the v-plane, [`game_ccp_exact`] integrates it
//! against the Gaussian shocks to produce choice probabilities on a grid of
//! instruments, and [`project_to_pair`] reduces a many-player outcome kernel
//! to one pair for the two-player tooling.

mod forward;
mod project;
mod region;
mod structure;

pub use forward::game_ccp_exact;
pub use project::{project_to_pair, OutcomeKernel, TRUNCATION_DEPTH};
pub use region::{
    game_outcomes, outcome_at, region_map, CellLabel, DiagonalSplit, MultiplicityBox,
    PointPrediction, RegionMap,
};
pub use structure::{separation_conditions, GameStructure, SolutionConcept};

#[cfg(test)]
pub(crate) use structure::test_game;
