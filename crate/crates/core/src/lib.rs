//! Diffusions in a random environment with a drift.
//!
//! The crate builds stationary random drift fields with finite-range
//! dependence, simulates the quenched diffusion `dX = b(X) dt + σ(X) dW`
//! until it leaves boxes, slabs and tubes, and evaluates the quantities that
//! decide ballistic behaviour: exit odds `ρ_B`, the finite-box effective
//! criterion, the exact one-dimensional theory, and the Green kernels of
//! Brownian motion killed on leaving a slab.
//!
//! Every Monte Carlo estimator is deterministic given its seed: paths draw
//! from per-index ChaCha streams and results are reduced in index order, so
//! the number of worker threads never changes an emitted number.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod effective;
pub mod env;
pub mod error;
pub mod example;
pub mod exec;
pub mod greenslab;
pub mod oned;
pub mod quad;
pub mod rng;
pub mod sde;
pub mod stats;

pub use env::{sample_environment, EnvSpec, Environment};
pub use error::{Error, Result};
pub use exec::Exec;
pub use stats::MCEstimate;
