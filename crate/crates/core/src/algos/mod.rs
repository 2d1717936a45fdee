//! Distributed solution of the partitioned problem by ADMM, ATC and APP.
//!
//! Every iteration each region solves its local QP with the current
//! penalty terms, sends its shared angles (and for ADMM/ATC its multipliers)
//! to every region holding a copy, then updates coordinator values and
//! multipliers from what it received.

mod params;
mod run;
mod steps;

pub use params::{
    preset, preset_alpha, AlgorithmKind, AlgorithmParams, PresetSource, TestSystem, DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
};
pub use run::{run_distributed, run_distributed_with_reference, IterationRecord, RunRecord, RunStatus};
pub use steps::{
    admm_coordinator, admm_multiplier_update, admm_penalty, app_multiplier_update, app_penalty, app_penalty_sum,
    atc_coordinator, atc_multiplier_and_beta_update, atc_penalty, shared_values, solve_local, Penalty,
};
