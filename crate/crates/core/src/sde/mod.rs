//! Quenched simulation of `dX = b(X)dt + σ(X)dW` with exit detection.
//!
//! Paths use Euler–Maruyama. Between grid times the path is treated as a
//! Brownian bridge: for each planar face, a step that ends inside is still
//! counted as an exit with probability `exp(−2δ₀δ₁/(ā dt))`, where `δ` are the
//! distances to the face and `ā = nᵀa n`. This removes the `O(√dt)` bias of
//! discrete monitoring.

mod domain;
mod estimate;
mod path;

pub use domain::{identity_rotation, rotation_to, CompiledDomain, Domain, FaceLabel};
pub use estimate::{
    estimate_exit_stats, exit_counts, map_paths, mean_exit_time, rho_cap, run_to_neighbor_slab, simulate, smoothed_rho, Bracket, ExitStats,
    ExitTimeEstimate, FaceCounts, Sim, SlabLadder, MAX_TIMEOUT_FRACTION,
};
pub use path::{default_dt, default_max_time, run_observed, run_until_exit, step, ExitRecord, PathObserver};
