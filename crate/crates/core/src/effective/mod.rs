//! The effective criterion and the renormalisation scales behind it.
//!
//! Every estimate here is two-level: environments are sampled, and within
//! each one the exit odds `ρ_B = q_B/p_B` of the box are estimated from face
//! counts with add-½ smoothing. All constants of the criterion are inputs;
//! reports always carry the constant-free core.

mod decay;
mod hierarchy;
mod moments;

pub use decay::{estimate_kappa, slab_exit_decay_scan, DecayRow, DecayScan, KappaEstimate};
pub use hierarchy::{build_hierarchy, check_recursion, BoxHierarchy, Level, LevelStatus, RecursionRow, HIERARCHY_ALPHA, HIERARCHY_V};
pub use moments::{
    estimate_rho_moment, evaluate_effective_criterion, mirror_duality, sample_rho, BoxResult, Budget, CriterionInput, CriterionReport, MirrorDuality,
    RhoMoment, RhoSamples,
};
