use crate::env::{sample_environment, EnvSpec};
use crate::error::{ensure, Error, Result};
use crate::exec::Exec;
use crate::rng::{env_seed, tag, StreamKey};
use crate::sde::{exit_counts, rho_cap, Domain, ExitStats, Sim};
use crate::stats::{ks_two_sample, KsResult, MCEstimate};
use serde::Serialize;

/// Two-level Monte Carlo budget: `n_env` environments with `n_path` paths
/// each. Environments run under `sim.exec`; paths within one environment run
/// sequentially.
#[derive(Clone, Copy, Debug)]
pub struct Budget {
    pub n_env: usize,
    pub n_path: usize,
    pub sim: Sim,
}

impl Budget {
    pub fn new(n_env: usize, n_path: usize, dt: f64) -> Self {
        Budget { n_env, n_path, sim: Sim::new(dt) }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.sim.exec = exec;
        self
    }

    pub(crate) fn check(&self) -> Result<()> {
        ensure(self.n_env >= 2, "n_env", || "need at least two environments".into())?;
        ensure(self.n_path >= 1, "n_path", || "need at least one path".into())?;
        ensure(self.sim.dt > 0.0, "dt", || "dt must be positive".into())
    }

    pub(crate) fn inner(&self) -> Sim {
        Sim { exec: Exec::sequential(), ..self.sim }
    }
}

/// Per-environment exit statistics from the origin.
#[derive(Clone, Debug, Serialize)]
pub struct RhoSamples {
    pub per_env: Vec<ExitStats>,
    pub cap: f64,
}

impl RhoSamples {
    pub fn rho(&self) -> Vec<f64> {
        self.per_env.iter().map(|s| s.rho_hat).collect()
    }

    pub fn moment(&self, a: f64) -> RhoMoment {
        let main: Vec<f64> = self.per_env.iter().map(|s| s.rho_hat.powf(a)).collect();
        let alt: Vec<f64> = self.per_env.iter().map(|s| s.rho_add_one.powf(a)).collect();
        let estimate = MCEstimate::from_samples(&main);
        let add_one = MCEstimate::from_samples(&alt);
        RhoMoment { a, band: (estimate.mean.min(add_one.mean), estimate.mean.max(add_one.mean)), estimate, add_one }
    }

    pub fn n_capped(&self) -> usize {
        self.per_env.iter().filter(|s| s.capped).count()
    }

    pub fn n_zero_count(&self) -> usize {
        self.per_env.iter().filter(|s| s.zero_count).count()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RhoMoment {
    pub a: f64,
    /// Add-½ smoothing.
    pub estimate: MCEstimate,
    /// Add-1 smoothing.
    pub add_one: MCEstimate,
    /// Smoothing-sensitivity band.
    pub band: (f64, f64),
}

/// Per-environment smoothed `ρ̂_B` from the origin, capped at `κ^{−(L+3)}`
/// where `L` is the positive depth of `dom` minus 2.
pub fn sample_rho(spec: &EnvSpec, dom: &Domain, kappa: f64, budget: &Budget, seed: u64) -> Result<RhoSamples> {
    spec.validate()?;
    budget.check()?;
    ensure(kappa > 0.0 && kappa <= 0.5, "kappa", || format!("κ = {kappa} must lie in (0, 1/2]"))?;
    dom.validate(spec.dim)?;
    let l = match dom {
        Domain::Box { depth_pos, .. } => depth_pos - 2.0,
        Domain::Thresholds { hi, .. } => *hi,
        Domain::Slab { half_width } | Domain::Interval { half_width } => *half_width,
        Domain::Tube { length, .. } => *length,
    };
    let cap = rho_cap(kappa, l.max(0.0));
    let origin = vec![0.0; spec.dim];
    let inner = budget.inner();
    let results: Vec<Result<ExitStats>> = budget.sim.exec.map(budget.n_env, |i| {
        let env = sample_environment(spec, env_seed(seed, i as u64))?;
        let counts = exit_counts(&env, &origin, dom, budget.n_path, &inner, StreamKey::new(seed, tag::PATH, i as u64))?;
        if counts.check().is_err() {
            return Err(Error::refused(format!("environment {i}: {} of {} paths timed out", counts.timeout, counts.total())));
        }
        ExitStats::from_counts(counts, cap)
    });
    Ok(RhoSamples { per_env: results.into_iter().collect::<Result<_>>()?, cap })
}

/// `Ê[ρ_B^a]` with environment-level standard error.
pub fn estimate_rho_moment(spec: &EnvSpec, dom: &Domain, a: f64, kappa: f64, budget: &Budget, seed: u64) -> Result<RhoMoment> {
    ensure(a > 0.0 && a <= 1.0, "a", || format!("a = {a} outside (0, 1]"))?;
    Ok(sample_rho(spec, dom, kappa, budget, seed)?.moment(a))
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxResult {
    pub l: f64,
    pub l_tilde: f64,
    pub moments: Vec<RhoMoment>,
    /// `E[ρ^a]·L̃^{d−1}L^{3(d−1)+1}` per `a`.
    pub core: Vec<f64>,
    /// `c₇(log 1/κ)^{3(d−1)}·core` per `a`.
    pub lhs: Vec<f64>,
    pub n_capped: usize,
    pub n_zero_count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionReport {
    pub dim: usize,
    pub kappa: f64,
    pub c7: f64,
    /// `(log 1/κ)^{3(d−1)}`.
    pub kappa_factor: f64,
    pub boxes: Vec<BoxResult>,
    pub best_a: f64,
    pub best_box: (f64, f64),
    pub best_core: f64,
    pub best_lhs: f64,
    /// `best_lhs` with the moment replaced by its mean plus three standard
    /// errors.
    pub best_lhs_upper: f64,
    pub decision: bool,
    pub n_env: usize,
    pub n_path: usize,
}

impl CriterionReport {
    /// Minimal left-hand side at another value of `c₇`.
    pub fn lhs_at(&self, c7: f64) -> f64 {
        c7 * self.kappa_factor * self.best_core
    }
}

#[derive(Clone, Debug)]
pub struct CriterionInput {
    pub l: f64,
    pub l_tilde: f64,
    pub a_grid: Vec<f64>,
    pub kappa: f64,
    pub c7: f64,
    /// Further `(L, L̃)` candidates searched alongside `(l, l_tilde)`.
    pub extra_boxes: Vec<(f64, f64)>,
}

fn check_box(spec: &EnvSpec, l: f64, lt: f64) -> Result<()> {
    ensure(lt >= spec.range + 2.0, "l_tilde", || format!("L̃ = {lt} below R + 2 = {}", spec.range + 2.0))?;
    ensure(lt < l.powi(3), "l_tilde", || format!("L̃ = {lt} must be below L³ = {}", l.powi(3)))?;
    ensure(l > spec.range + 2.0, "L", || format!("L = {l} must exceed R + 2 so the box has a back side"))
}

pub fn evaluate_effective_criterion(spec: &EnvSpec, input: &CriterionInput, budget: &Budget, seed: u64) -> Result<CriterionReport> {
    ensure(!input.a_grid.is_empty() && input.a_grid.iter().all(|a| *a > 0.0 && *a <= 1.0), "a_grid", || {
        "a-grid must be non-empty within (0, 1]".into()
    })?;
    ensure(input.c7 > 0.0, "c7", || "c₇ must be positive".into())?;
    let d = spec.dim as i32;
    let kappa_factor = (1.0 / input.kappa).ln().powi(3 * (d - 1));
    let mut candidates = vec![(input.l, input.l_tilde)];
    candidates.extend(input.extra_boxes.iter().copied());
    let mut boxes = Vec::new();
    for (bi, &(l, lt)) in candidates.iter().enumerate() {
        check_box(spec, l, lt)?;
        let dom = Domain::criterion_box(spec.dim, l, lt, spec.range);
        let samples = sample_rho(spec, &dom, input.kappa, budget, crate::rng::hash_words(&[seed, bi as u64]))?;
        let geometry = lt.powi(d - 1) * l.powi(3 * (d - 1) + 1);
        let moments: Vec<RhoMoment> = input.a_grid.iter().map(|a| samples.moment(*a)).collect();
        let core: Vec<f64> = moments.iter().map(|m| m.estimate.mean * geometry).collect();
        let lhs = core.iter().map(|c| input.c7 * kappa_factor * c).collect();
        boxes.push(BoxResult { l, l_tilde: lt, moments, core, lhs, n_capped: samples.n_capped(), n_zero_count: samples.n_zero_count() });
    }
    let mut best = (0, 0);
    for (bi, b) in boxes.iter().enumerate() {
        for ai in 0..b.lhs.len() {
            if b.lhs[ai] < boxes[best.0].lhs[best.1] {
                best = (bi, ai);
            }
        }
    }
    let b = &boxes[best.0];
    let m = &b.moments[best.1].estimate;
    let best_lhs = b.lhs[best.1];
    let best_lhs_upper = best_lhs * (m.mean + 3.0 * m.stderr) / m.mean.max(f64::MIN_POSITIVE);
    Ok(CriterionReport {
        dim: spec.dim,
        kappa: input.kappa,
        c7: input.c7,
        kappa_factor,
        best_a: input.a_grid[best.1],
        best_box: (b.l, b.l_tilde),
        best_core: b.core[best.1],
        best_lhs,
        best_lhs_upper,
        decision: best_lhs < 1.0,
        boxes,
        n_env: budget.n_env,
        n_path: budget.n_path,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MirrorDuality {
    /// KS test of `ρ_B` under the reversed spec against `ρ_{MB}` under the
    /// original spec, `M` the reflection of `e₁`.
    pub ks: KsResult,
    /// KS test of `ρ_B` (reversed) against `1/ρ_B` (original), exact only
    /// without lateral exits.
    pub naive_inverse: KsResult,
    pub pass: bool,
}

/// Mirror duality check with independent seeds for the two samples.
pub fn mirror_duality(spec: &EnvSpec, l: f64, l_tilde: f64, kappa: f64, budget: &Budget, seed: u64) -> Result<MirrorDuality> {
    check_box(spec, l, l_tilde)?;
    let dom = Domain::criterion_box(spec.dim, l, l_tilde, spec.range);
    let reversed = sample_rho(&spec.reversed(), &dom, kappa, budget, seed)?;
    let mirrored = sample_rho(spec, &dom.mirrored(), kappa, budget, crate::rng::hash_words(&[seed, 0x4d49_5252]))?;
    let original = sample_rho(spec, &dom, kappa, budget, crate::rng::hash_words(&[seed, 0x4f52_4947]))?;
    let inv: Vec<f64> = original.rho().iter().map(|r| 1.0 / r).collect();
    let ks = ks_two_sample(&reversed.rho(), &mirrored.rho());
    Ok(MirrorDuality { pass: ks.p_value > 1e-3, naive_inverse: ks_two_sample(&reversed.rho(), &inv), ks })
}
