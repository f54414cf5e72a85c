use super::params::{delta_condition, DeltaCondition, ExampleParams};
use super::quenched::tube_displacement;
use super::rhohat::{rhohat_estimate, v_grid, RhohatReport};
use crate::effective::{estimate_rho_moment, Budget, RhoMoment};
use crate::env::{sample_environment, EnvSpec};
use crate::error::{ensure, Result};
use crate::rng::{env_seed, hash_words, tag, StreamKey};
use crate::sde::Domain;
use crate::stats::MCEstimate;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlEstimate {
    pub spacing: f64,
    /// `γL`
    pub threshold: f64,
    pub grid_points: usize,
    /// Per environment, `min_x Δ̂(x, ω)·e₁` over the cell grid.
    pub min_delta: Vec<f64>,
    pub estimate: MCEstimate,
}

/// `P[Δ(z, ω)·e₁ ≥ γL for all z]` over a grid of the cube `[−R/2, R/2]^d`
/// with the given spacing, one environment per sample. Transverse
/// stationarity makes this cell representative of every cell of `B̃^j`.
pub fn estimate_p_l(spec: &EnvSpec, params: &ExampleParams, budget: &Budget, spacing: f64, seed: u64) -> Result<PlEstimate> {
    spec.validate()?;
    ensure(budget.n_env >= 2 && budget.n_path >= 2, "budget", || "need at least two environments and two paths".into())?;
    let cell = ExampleParams { transverse_cap: params.range / 2.0, ..params.clone() };
    let grid = v_grid(&cell, spacing);
    let threshold = params.gamma * params.l;
    let inner = budget.inner();
    let mins: Vec<Result<f64>> = budget.sim.exec.map(budget.n_env, |i| {
        let env = sample_environment(spec, env_seed(seed, i as u64))?;
        let key = StreamKey::new(seed, tag::PATH, i as u64);
        let mut m = f64::INFINITY;
        for (j, x) in grid.iter().enumerate() {
            let (d, _) = tube_displacement(&env, x, params.l, params.h, budget.n_path, &inner, key.child(j as u64))?;
            m = m.min(d.mean);
        }
        Ok(m)
    });
    let min_delta: Vec<f64> = mins.into_iter().collect::<Result<_>>()?;
    let k = min_delta.iter().filter(|m| **m >= threshold).count();
    Ok(PlEstimate { spacing, threshold, grid_points: grid.len(), estimate: MCEstimate::proportion(k, min_delta.len()), min_delta })
}

/// Constants of the assembled bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Prop33Constants {
    pub kappa: f64,
    /// The Harnack constant `c` in `c^a`.
    pub c: f64,
}

impl Default for Prop33Constants {
    fn default() -> Self {
        Prop33Constants { kappa: 0.5, c: 1.0 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Prop33Budgets {
    pub rho_hat: Budget,
    pub p_l: Budget,
    pub direct: Budget,
    /// Grid spacing in `𝒱` and in the cell of `p_L`; `R/2` covers both.
    pub spacing: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop33Report {
    pub params: ExampleParams,
    pub constants: Prop33Constants,
    pub delta: DeltaCondition,
    pub p_l: PlEstimate,
    pub rho_hat: RhohatReport,
    /// Natural log of the first term.
    pub log_first: f64,
    /// The first term is no better than the trivial bound `κ^{−a(NL′+3)}`,
    /// or the δ condition fails.
    pub first_vacuous: bool,
    /// Natural log of the second term; infinite when `Ê[ρ̂^{2a}] ≥ 1`.
    pub log_second: f64,
    pub log_bound: f64,
    /// `Ê[ρ_B^a]` on `B(Id, NL′ − R − 2, NL′ + 2, ¼(NL′)³)`.
    pub direct: RhoMoment,
    pub direct_within_bound: bool,
    pub regime: String,
}

/// Evaluates both terms of the box bound from estimated `p_L` and
/// `E[ρ̂^{2a}]`, next to a direct estimate of `E[ρ_B^a]`.
pub fn assemble_prop33(spec: &EnvSpec, params: &ExampleParams, budgets: &Prop33Budgets, consts: Prop33Constants, seed: u64) -> Result<Prop33Report> {
    ensure(consts.kappa > 0.0 && consts.kappa <= 0.5, "kappa", || format!("κ = {} must lie in (0, 1/2]", consts.kappa))?;
    ensure(consts.c >= 1.0, "c", || format!("c = {} must be ≥ 1", consts.c))?;
    let p = params;
    let a = p.a;
    let delta = delta_condition(p);
    let p_l = estimate_p_l(spec, p, &budgets.p_l, budgets.spacing, hash_words(&[seed, 1]))?;
    let grid = v_grid(p, budgets.spacing);
    let rho_hat = rhohat_estimate(spec, p, &budgets.rho_hat, &grid, hash_words(&[seed, 2]))?;

    let nl = p.n * p.l_prime;
    let log_inv_kappa = (1.0 / consts.kappa).ln();
    let log_trivial = a * (nl + 3.0) * log_inv_kappa;
    let mut log_first = a * consts.c.ln() + a * nl * log_inv_kappa + (2.0 * p.dim as f64).ln();
    if delta.pass {
        let log_delta = -delta.inv_delta.ln();
        let inner = (p_l.estimate.mean - 10.0 * p.n * p.l * log_inv_kappa / (p.m * log_delta)).max(0.0);
        log_first -= 0.5 * p.m * inner * inner;
    }
    let first_vacuous = !delta.pass || log_first >= log_trivial;

    let m2 = rho_hat.moment_2a.mean;
    let log_second = if m2 < 1.0 { a * consts.c.ln() + 2f64.ln() + 0.5 * p.n * m2.ln() - (1.0 - m2.sqrt()).ln() } else { f64::INFINITY };
    let log_bound = log_add(log_first, log_second);

    let dom = Domain::criterion_box(spec.dim, nl, 0.25 * nl.powi(3), p.range);
    let direct = estimate_rho_moment(spec, &dom, a, consts.kappa, &budgets.direct, hash_words(&[seed, 3]))?;
    let lower = (direct.estimate.mean - 3.0 * direct.estimate.stderr).max(0.0);
    Ok(Prop33Report {
        params: p.clone(),
        constants: consts,
        delta,
        p_l,
        rho_hat,
        log_first,
        first_vacuous,
        log_second,
        log_bound,
        direct_within_bound: lower.ln() <= log_bound,
        direct,
        regime: p.regime.clone(),
    })
}

fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum() {
        assert!((log_add(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_add(1.0, f64::INFINITY), f64::INFINITY);
        assert!((log_add(-1000.0, 0.0)).abs() < 1e-300);
    }
}
