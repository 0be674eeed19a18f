//! Tail asymptotics of two-dimensional sticky Brownian motion in the
//! quadrant: model validation, kernel geometry, decay-rate classification,
//! extreme-value norming, and a Monte Carlo simulator for checking them.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod extreme;
pub mod kernel;
pub mod model;
pub mod roots;
pub mod serde_ext;
pub mod sim;

pub use kernel::{
    branch_points, face_polys, find_x_star, find_y_star_x_tilde, kernel_eval, singularity_candidates,
    x_branch, y_branch, Branch, BranchPoints, KernelError, KernelForm, SingularityCandidates,
};
pub use model::{
    local_time_rates, LocalTimeRates, Mat2, Model, ModelParams, RatesError, ValidationErrors, Vec2,
    Violation,
};
pub use classify::{
    check_substochastic, classify_boundary, classify_direction, classify_marginal,
    joint_tail_params, ClassifyError, DirectionalQuery, Dominant, Family, Regime, TailAsymptotic,
};
pub use extreme::{
    block_maxima_check, estimate_coefficient, ev_norming, gumbel_cdf, independence_diagnostic,
    joint_tail_eval, EvNorming, ExtremeError, JointTailModel,
};
pub use sim::{SimConfig, SimError};
