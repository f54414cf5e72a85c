//! The perturbed Brownian motion `½Δ + b·∇` with `|b| ≤ ε` and mean drift
//! `λ ≥ ε^{2−η}`, on the slab `𝒮 = {|x·e₁| < L}`, `L = ⌊1/(4ε)⌋`.
//!
//! The quenched Green operator `G_𝒮^ω` is estimated pathwise and compared
//! with the Brownian kernel through the perturbation identity, the exit
//! formula for `p̂`, the tube displacement `Δ` and the backtrack bound. The
//! box bound is then assembled from the estimated `p_L` and `E[ρ̂^{2a}]`.
//! Reports made with `N ≠ L³` are stamped as desk scale.

mod assemble;
mod fluctuation;
mod params;
mod quenched;
mod rhohat;

pub use assemble::{assemble_prop33, estimate_p_l, PlEstimate, Prop33Budgets, Prop33Constants, Prop33Report};
pub use fluctuation::{fluctuation_std, FluctuationStd};
pub use params::{default_c12, delta_condition, delta_inverse, example_dt, half_width_for, DeltaCondition, ExampleParams, DESK_SCALE};
pub use quenched::{
    backtrack_bound, check_perturbation_identity, displacement_check, drift_e1, green_op_quenched, green_samples, phat_formula_vs_mc,
    supermartingale_exit_bound, tube_displacement, BacktrackReport, DisplacementRow, PerturbationReport, PerturbationRow, PhatComparison,
    QuenchedGreen,
};
pub use rhohat::{rho_hat_ratio, rhohat_estimate, v_grid, RhohatEnv, RhohatReport};
