//! Kernels of Brownian motion killed on leaving the slab `{|x₁| < L}`.
//!
//! The heat kernel uses the alternating image series for short times and the
//! Dirichlet eigen-expansion for long times. The Green function (`d ≥ 4`)
//! near the pole sums images explicitly and closes the series with an
//! Euler–Maclaurin tail; for transverse separations beyond `L/2` it switches
//! to the eigen-expansion in `x₁`, where each mode carries a modified Bessel
//! kernel in the transverse distance.

mod apply;
mod bessel;
mod envelope;
mod kernel;
mod sums;

pub(crate) use apply::sphere_rule;
pub use apply::{apply_rule, green_apply, ApplyResult, ApplyRule, FieldFn, ProfileFn, ProfileGreen, SlabFunction};
pub use envelope::{envelope_pairs, fit_envelopes, EnvelopeFit, Pair};
pub use kernel::{GreenValue, SlabKernel};
pub use sums::{gamma_envelopes, gamma_sums, GammaRow, GammaSums};
