//! Exact one-dimensional theory.
//!
//! In `d = 1` every exit probability is a ratio of scale-function
//! increments, so `ρ_L`, the slab-chain ratios and the Dirichlet solution of
//! the embedded chain are computed without simulation and serve as oracles
//! for the Monte Carlo code.

mod chain;
mod identity;
mod recursion;
mod scale;

pub use chain::{chain_exit_probability, ChainSpec};
pub use identity::{check_identity_275, solomon_dichotomy, DichotomyBudget, DichotomyReport, Identity275Report, Verdict};
pub use recursion::{eta_delta_recursion, eta_delta_sequences, EtaDeltaSequences, EtaSeed, RecursionReport};
pub use scale::{log_rho_l, rho_l_exact, scale_function, ScaleProfile};

/// Exact probability that a diffusion started at `x` hits `hi` before `lo`.
pub fn hit_right_probability(profile: &ScaleProfile, x: f64, lo: f64, hi: f64) -> f64 {
    if x <= lo {
        return 0.0;
    }
    if x >= hi {
        return 1.0;
    }
    (profile.log_increment(lo, x) - profile.log_increment(lo, hi)).exp()
}
