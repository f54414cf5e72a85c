use crate::env::EnvSpec;
use crate::error::{ensure, Result};
use serde::Serialize;

/// Stamp carried by every report computed with `N ≠ L³`.
pub const DESK_SCALE: &str = "desk-scale, not the paper's asymptotic regime";

/// Scales of the perturbed-Brownian-motion example.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleParams {
    pub dim: usize,
    /// ε
    pub eps: f64,
    /// η
    pub eta: f64,
    /// λ
    pub lambda: f64,
    /// R
    pub range: f64,
    /// `L = ⌊1/(4ε)⌋`
    pub l: f64,
    /// `L′ = L + R/2`
    pub l_prime: f64,
    /// N
    pub n: f64,
    /// `h = L′²`
    pub h: f64,
    /// `H = ⌊(NL′)²⌋`
    pub big_h: f64,
    /// `M = ⌊(NL′)³/(32H)⌋`
    pub m: f64,
    /// `γ = ¼c₁₂L^{η−1}`
    pub gamma: f64,
    pub c12: f64,
    /// Moment exponent of the assembled bound.
    pub a: f64,
    /// Transverse half-extent of the sets `𝒱` and `B̃^j` actually searched.
    pub transverse_cap: f64,
    /// `λ ≥ ε^{2−η}`.
    pub perturbative: bool,
    pub regime: String,
}

impl ExampleParams {
    /// Desk-scale parameters with `N = 4`.
    pub fn new(spec: &EnvSpec) -> Result<Self> {
        Self::build(spec, 4.0, default_c12(spec.eta))
    }

    /// `N = L³`.
    pub fn paper_scale(spec: &EnvSpec) -> Result<Self> {
        let l = half_width_for(spec.drift_bound)?;
        Self::build(spec, l * l * l, default_c12(spec.eta))
    }

    pub fn with_n(&self, n: f64, spec: &EnvSpec) -> Result<Self> {
        Self::build(spec, n, self.c12).map(|p| ExampleParams { a: self.a, transverse_cap: self.transverse_cap, ..p })
    }

    pub fn with_c12(&self, c12: f64, spec: &EnvSpec) -> Result<Self> {
        Self::build(spec, self.n, c12).map(|p| ExampleParams { a: self.a, transverse_cap: self.transverse_cap, ..p })
    }

    pub fn with_a(mut self, a: f64) -> Result<Self> {
        ensure(a > 0.0 && a <= 1.0, "a", || format!("a = {a} outside (0, 1]"))?;
        self.a = a;
        Ok(self)
    }

    pub fn with_transverse_cap(mut self, cap: f64) -> Result<Self> {
        ensure(cap >= 0.0 && cap.is_finite(), "transverse_cap", || format!("cap = {cap} must be finite and ≥ 0"))?;
        self.transverse_cap = cap;
        Ok(self)
    }

    fn build(spec: &EnvSpec, n: f64, c12: f64) -> Result<Self> {
        spec.validate()?;
        let l = half_width_for(spec.drift_bound)?;
        ensure(n >= 1.0 && n.is_finite(), "n", || format!("N = {n} must be ≥ 1"))?;
        ensure(c12 > 0.0, "c12", || format!("c₁₂ = {c12} must be positive"))?;
        let r = spec.range;
        let lp = l + r / 2.0;
        let h = lp * lp;
        let nl = n * lp;
        let big_h = (nl * nl).floor();
        ensure(2.0 * h <= big_h && big_h <= nl.powi(3) / 32.0, "n", || {
            format!("2h ≤ H ≤ (NL′)³/32 fails: h = {h}, H = {big_h}, (NL′)³/32 = {} (needs NL′ ≥ 32)", nl.powi(3) / 32.0)
        })?;
        let m = (nl.powi(3) / (32.0 * big_h)).floor();
        let paper = n == l * l * l;
        Ok(ExampleParams {
            dim: spec.dim,
            eps: spec.drift_bound,
            eta: spec.eta,
            lambda: spec.mean_drift,
            range: r,
            l,
            l_prime: lp,
            n,
            h,
            big_h,
            m,
            gamma: 0.25 * c12 * l.powf(spec.eta - 1.0),
            c12,
            a: 0.5,
            transverse_cap: r / 2.0,
            perturbative: spec.in_perturbative_regime(),
            regime: if paper { "paper scale N = L³".into() } else { DESK_SCALE.into() },
        })
    }
}

/// `L = ⌊1/(4ε)⌋`.
pub fn half_width_for(eps: f64) -> Result<f64> {
    ensure(eps > 0.0 && eps < 0.25, "drift_bound", || format!("ε = {eps} must lie in (0, 1/4) to fix L = ⌊1/(4ε)⌋"))?;
    Ok((1.0 / (4.0 * eps)).floor())
}

/// `c₁₂ = 4^{η−2}/3`: with `λ ≥ ε^{2−η}`, `ε ≤ 1/(4L)` and
/// `E T_𝒮 ≥ ⅔(L² − R²/4) ≥ L²/3` this gives `λ E T_𝒮 ≥ c₁₂ L^η` once `L ≥ R/√2`.
pub fn default_c12(eta: f64) -> f64 {
    4f64.powf(eta - 2.0) / 3.0
}

/// Time step keeping a slab of half-width `L` near 2500 steps per path.
pub fn example_dt(l: f64) -> f64 {
    (l * l / 2500.0).clamp(1e-3, 0.25)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaCondition {
    pub first: f64,
    pub second: f64,
    /// `(H/(2hN) − 4/γ)₊`
    pub positive_part: f64,
    pub inv_delta: f64,
    pub pass: bool,
}

/// `δ⁻¹ = e^{−γN/128} + (10N/γ) exp{−(γN/32)(H/(2hN) − 4/γ)₊²}`.
pub fn delta_inverse(gamma: f64, n: f64, h: f64, big_h: f64) -> DeltaCondition {
    let first = (-gamma * n / 128.0).exp();
    let positive_part = (big_h / (2.0 * h * n) - 4.0 / gamma).max(0.0);
    let second = 10.0 * n / gamma * (-(gamma * n / 32.0) * positive_part * positive_part).exp();
    let inv_delta = first + second;
    DeltaCondition { first, second, positive_part, inv_delta, pass: inv_delta < 1.0 }
}

pub fn delta_condition(params: &ExampleParams) -> DeltaCondition {
    delta_inverse(params.gamma, params.n, params.h, params.big_h)
}
