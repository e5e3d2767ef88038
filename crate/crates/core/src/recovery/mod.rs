//! Convex recovery of the transmitted mixture from one array observation.
//!
//! [`build_op1`] recovers molecule concentrations, [`build_op2`] recovers
//! mixture weights directly using the known alphabet. Both are solved by
//! [`solve`]. [`op0_oracle`] is an exhaustive l0 search kept for
//! cross-checking at tiny dimensions.

mod op0;
mod program;
mod solver;

pub use op0::{expected_signal_error, op0_error_budget, op0_oracle, GridSpec, MAX_OP0_MOLECULES};
pub use program::{
    activated_ball_bound, build_op1, build_op2, silent_receptor_rhs, Affine, BallConstraint, ConicProgram,
    LinearConstraint, ObjectiveBlock, Residual, RotatedConstraint,
};
pub use solver::{solve, RecoverySolution, SolveSettings, SolveStatus};

use crate::affinity::AffinityMatrix;
use crate::channel::ArrayObservation;
use crate::error::Result;
use crate::mixture::MixtureMatrix;
use crate::model::SystemConfig;

pub fn recover_op1(obs: &ArrayObservation, affinity: &AffinityMatrix, cfg: &SystemConfig) -> Result<RecoverySolution> {
    solve(&build_op1(obs, affinity, cfg)?, &SolveSettings::default())
}

pub fn recover_op2(
    obs: &ArrayObservation,
    affinity: &AffinityMatrix,
    mixtures: &MixtureMatrix,
    cfg: &SystemConfig,
) -> Result<RecoverySolution> {
    solve(&build_op2(obs, affinity, mixtures, cfg)?, &SolveSettings::default())
}
