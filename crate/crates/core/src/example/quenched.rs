use crate::env::Environment;
use crate::error::{ensure, Result};
use crate::greenslab::ProfileGreen;
use crate::rng::StreamKey;
use crate::sde::{exit_counts, simulate, Domain, ExitRecord, FaceCounts, FaceLabel, PathObserver, Sim};
use crate::stats::{agree, MCEstimate};
use serde::Serialize;

/// Accumulates `∫ f(X_s, b(X_s)) ds` with the left-endpoint rule; the last
/// step is the partial step up to the crossing.
struct TimeIntegral<'a, F> {
    f: &'a F,
    sum: f64,
}

impl<F: Fn(&[f64], &[f64]) -> f64> PathObserver for TimeIntegral<'_, F> {
    #[inline]
    fn step(&mut self, x: &[f64], drift: &[f64], dt: f64) {
        self.sum += (self.f)(x, drift) * dt;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuenchedGreen {
    pub estimate: MCEstimate,
    pub counts: FaceCounts,
}

/// Per-path values of `∫₀^{T_𝒮} f(X_s, b(X_s)) ds` on the slab `|x·e₁| < L`,
/// with their exit records.
pub fn green_samples<F>(env: &Environment, f: &F, x: &[f64], l: f64, n: usize, sim: &Sim, key: StreamKey) -> Result<Vec<(f64, ExitRecord)>>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    ensure(x[0].abs() < l, "x", || format!("start point x·e₁ = {} outside the slab of half-width {l}", x[0]))?;
    let dom = Domain::Slab { half_width: l };
    let runs = simulate(env, x, &dom, n, sim, key, || TimeIntegral { f, sum: 0.0 })?;
    let mut counts = FaceCounts::default();
    for (r, _) in &runs {
        counts.add(r.face);
    }
    counts.check()?;
    Ok(runs.into_iter().filter(|(r, _)| r.face != FaceLabel::Timeout).map(|(r, o)| (o.sum, r)).collect())
}

/// `G_𝒮^ω f(x) = E_{x,ω}[∫₀^{T_𝒮} f(X_s) ds]` by Monte Carlo. The integrand
/// receives the position and the drift there, so `f = b₁` costs nothing extra.
pub fn green_op_quenched<F>(env: &Environment, f: &F, x: &[f64], l: f64, n: usize, sim: &Sim, key: StreamKey) -> Result<QuenchedGreen>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    ensure(n >= 2, "n", || "need at least two paths".into())?;
    let s = green_samples(env, f, x, l, n, sim, key)?;
    let mut counts = FaceCounts::default();
    for (_, r) in &s {
        counts.add(r.face);
    }
    let v: Vec<f64> = s.iter().map(|(g, _)| *g).collect();
    Ok(QuenchedGreen { estimate: MCEstimate::from_samples(&v), counts })
}

pub fn drift_e1(_: &[f64], b: &[f64]) -> f64 {
    b[0]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhatComparison {
    pub x: Vec<f64>,
    /// Frequency of leaving the slab through `x·e₁ = L`.
    pub direct: MCEstimate,
    /// `G_𝒮^ω b₁(x)`
    pub green_b1: MCEstimate,
    /// `(x·e₁ + L + G_𝒮^ω b₁(x))/(2L)`
    pub formula: MCEstimate,
    pub agree: bool,
    /// `|G_𝒮^ω b₁(x)| ≤ L/2` holds at the 3σ level.
    pub green_bound_ok: bool,
}

/// Direct exit frequency against the martingale formula for `p̂`, from
/// independent path sets.
pub fn phat_formula_vs_mc(env: &Environment, x: &[f64], l: f64, n: usize, sim: &Sim, key: StreamKey) -> Result<PhatComparison> {
    let counts = exit_counts(env, x, &Domain::Slab { half_width: l }, n, sim, key.child(0))?;
    counts.check()?;
    let direct = MCEstimate::proportion(counts.positive, counts.completed());
    let green_b1 = green_op_quenched(env, &drift_e1, x, l, n, sim, key.child(1))?.estimate;
    let formula = green_b1.shift(x[0] + l).scale(1.0 / (2.0 * l));
    Ok(PhatComparison {
        x: x.to_vec(),
        agree: agree(&direct, &formula, 3.0),
        green_bound_ok: green_b1.mean.abs() - 3.0 * green_b1.stderr <= l / 2.0,
        direct,
        green_b1,
        formula,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationRow {
    pub x: Vec<f64>,
    /// `G_𝒮^ω f(x)`
    pub lhs: MCEstimate,
    /// `G_𝒮 f(x)`
    pub free: f64,
    /// `G_𝒮^ω (b·∇G_𝒮 f)(x)`
    pub correction: MCEstimate,
    pub residual: MCEstimate,
    /// Residual with the correction subtracted instead of added.
    pub residual_printed_sign: MCEstimate,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub rows: Vec<PerturbationRow>,
    pub pass: bool,
}

/// Checks `G_𝒮^ω f = G_𝒮 f + G_𝒮^ω(b·∇G_𝒮 f)` for a test function of `y·e₁`.
/// `G_𝒮 f` and its gradient come from the exact profile kernel; both
/// quenched terms are estimated on independent path sets.
pub fn check_perturbation_identity<F>(
    env: &Environment,
    f1: F,
    x_list: &[Vec<f64>],
    l: f64,
    n: usize,
    sim: &Sim,
    key: StreamKey,
) -> Result<PerturbationReport>
where
    F: Fn(f64) -> f64 + Sync,
{
    let pg = ProfileGreen::new(l, 2000, &f1)?;
    let f = |y: &[f64], _: &[f64]| f1(y[0]);
    let corr = |y: &[f64], b: &[f64]| b[0] * pg.derivative(y[0]);
    let mut rows = Vec::with_capacity(x_list.len());
    for (i, x) in x_list.iter().enumerate() {
        let k = key.child(i as u64);
        let lhs = green_op_quenched(env, &f, x, l, n, sim, k.child(0))?.estimate;
        let correction = green_op_quenched(env, &corr, x, l, n, sim, k.child(1))?.estimate;
        let free = pg.value(x[0]);
        let se = lhs.stderr.hypot(correction.stderr);
        let residual = MCEstimate { mean: lhs.mean - free - correction.mean, stderr: se, n: lhs.n };
        let residual_printed_sign = MCEstimate { mean: lhs.mean - free + correction.mean, stderr: se, n: lhs.n };
        rows.push(PerturbationRow { x: x.clone(), pass: residual.within(0.0, 3.0, 0.0), lhs, free, correction, residual, residual_printed_sign });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(PerturbationReport { rows, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisplacementRow {
    pub x: Vec<f64>,
    /// `Δ(x, ω)·e₁` for the tube of length `L` and transverse half-width `h`.
    pub delta_e1: MCEstimate,
    pub green_b1: MCEstimate,
    pub gap: MCEstimate,
    pub lateral_fraction: f64,
    pub counts: FaceCounts,
}

/// `Δ(x, ω)·e₁ = E_{x,ω}[X_S·e₁] − x·e₁` next to `G_𝒮^ω b₁(x)`.
pub fn displacement_check(
    env: &Environment,
    x_list: &[Vec<f64>],
    l: f64,
    h: f64,
    n: usize,
    sim: &Sim,
    key: StreamKey,
) -> Result<Vec<DisplacementRow>> {
    let mut rows = Vec::with_capacity(x_list.len());
    for (i, x) in x_list.iter().enumerate() {
        let k = key.child(i as u64);
        let (delta_e1, counts) = tube_displacement(env, x, l, h, n, sim, k.child(0))?;
        let green_b1 = green_op_quenched(env, &drift_e1, x, l, n, sim, k.child(1))?.estimate;
        let gap = MCEstimate { mean: delta_e1.mean - green_b1.mean, stderr: delta_e1.stderr.hypot(green_b1.stderr), n: delta_e1.n };
        rows.push(DisplacementRow {
            x: x.clone(),
            delta_e1,
            green_b1,
            gap,
            lateral_fraction: counts.lateral as f64 / counts.completed().max(1) as f64,
            counts,
        });
    }
    Ok(rows)
}

/// Mean e₁ displacement at the exit time `S` of the tube around `x`.
pub fn tube_displacement(env: &Environment, x: &[f64], l: f64, h: f64, n: usize, sim: &Sim, key: StreamKey) -> Result<(MCEstimate, FaceCounts)> {
    ensure(n >= 2, "n", || "need at least two paths".into())?;
    let dom = Domain::Tube { center: x.to_vec(), length: l, halfwidth: h };
    let runs = simulate(env, x, &dom, n, sim, key, || ())?;
    let mut counts = FaceCounts::default();
    for (r, _) in &runs {
        counts.add(r.face);
    }
    counts.check()?;
    let v: Vec<f64> = runs.iter().filter(|(r, _)| r.face != FaceLabel::Timeout).map(|(r, _)| r.exit_point[0] - x[0]).collect();
    Ok((MCEstimate::from_samples(&v), counts))
}

/// `(1 − e^{−2εR})/(1 − e^{−8εL})`, with the limit `R/(4L)` at `ε = 0`.
pub fn backtrack_bound(eps: f64, range: f64, l: f64) -> f64 {
    if eps == 0.0 {
        return range / (4.0 * l);
    }
    (-2.0 * eps * range).exp_m1() / (-8.0 * eps * l).exp_m1()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BacktrackReport {
    pub l: f64,
    pub eps: f64,
    pub range: f64,
    /// `P_{Le₁,ω}[T̃_{−L+R/2} < T_{L+R/2}]`
    pub estimate: MCEstimate,
    pub bound: f64,
    pub pass: bool,
}

/// Probability of backtracking from `x·e₁ = L` to `−L + R/2` before reaching
/// `L + R/2`, against the supermartingale bound.
pub fn supermartingale_exit_bound(env: &Environment, l: f64, n: usize, sim: &Sim, key: StreamKey) -> Result<BacktrackReport> {
    ensure(l > 0.0, "l", || "L must be positive".into())?;
    let d = env.dim();
    let (eps, r) = (env.spec().drift_bound, env.spec().range);
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    let dom = Domain::Thresholds { direction: e1, lo: -l + r / 2.0, hi: l + r / 2.0 };
    let mut y = vec![0.0; d];
    y[0] = l;
    let counts = exit_counts(env, &y, &dom, n, sim, key)?;
    counts.check()?;
    let estimate = MCEstimate::proportion(counts.negative, counts.completed());
    let bound = backtrack_bound(eps, r, l);
    Ok(BacktrackReport { l, eps, range: r, pass: estimate.mean - 3.0 * estimate.stderr <= bound, estimate, bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_limit() {
        let (r, l) = (3.0, 10.0);
        assert_eq!(backtrack_bound(0.0, r, l), 0.075);
        assert!((backtrack_bound(1e-9, r, l) - 0.075).abs() < 1e-8);
        // Holds for every drift with |b| ≤ ε, so it grows with ε.
        assert!(backtrack_bound(0.02, r, l) > 0.075);
    }
}
