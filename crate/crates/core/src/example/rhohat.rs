use super::params::ExampleParams;
use super::quenched::{drift_e1, green_op_quenched};
use crate::effective::Budget;
use crate::env::{sample_environment, EnvSpec};
use crate::error::{ensure, Result};
use crate::rng::{env_seed, tag, StreamKey};
use crate::stats::MCEstimate;
use serde::Serialize;

/// Grid over `𝒱 = {|x·e₁| ≤ R/2, |x_j| ≤ cap}` with spacing at most `spacing`.
pub fn v_grid(params: &ExampleParams, spacing: f64) -> Vec<Vec<f64>> {
    let axis = |half: f64| -> Vec<f64> {
        if half <= 0.0 {
            return vec![0.0];
        }
        let k = (2.0 * half / spacing).ceil().max(1.0) as usize;
        (0..=k).map(|i| -half + 2.0 * half * i as f64 / k as f64).collect()
    };
    let first = axis(params.range / 2.0);
    let other = axis(params.transverse_cap);
    let mut pts: Vec<Vec<f64>> = first.iter().map(|&x| vec![x]).collect();
    for _ in 1..params.dim {
        pts = pts.iter().flat_map(|p| other.iter().map(move |&y| [p.as_slice(), &[y]].concat())).collect();
    }
    pts
}

/// Largest gap between a point of `𝒱` and the grid, per axis.
fn grid_spacing(grid: &[Vec<f64>], axis: usize) -> f64 {
    let mut c: Vec<f64> = grid.iter().map(|p| p[axis]).collect();
    c.sort_by(f64::total_cmp);
    c.dedup();
    c.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// `(L − x·e₁ − G)/(L + x·e₁ + G)`; infinite once the denominator vanishes.
pub fn rho_hat_ratio(l: f64, x1: f64, green: f64) -> f64 {
    let den = l + x1 + green;
    if den <= 0.0 {
        f64::INFINITY
    } else {
        (l - x1 - green) / den
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RhohatEnv {
    pub rho_hat: f64,
    pub argmax: Vec<f64>,
    pub green_at_argmax: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RhohatReport {
    pub l: f64,
    pub transverse_cap: f64,
    pub grid_points: usize,
    /// Grid spacing ≤ R/2 on every axis and the corners of `𝒱` included.
    pub grid_covers: bool,
    pub per_env: Vec<RhohatEnv>,
    /// `Ê[ρ̂(0, ω)]`
    pub estimate: MCEstimate,
    /// `Ê[ρ̂(0, ω)^{2a}]`
    pub moment_2a: MCEstimate,
    pub below_one: bool,
    /// `L ≥ 3R`, where `ρ̂ ≤ 5` must hold.
    pub cap_applies: bool,
    pub cap_violations: usize,
    pub regime: String,
    pub warning: String,
}

/// `Ê[ρ̂(0, ω)]` with `ρ̂` the sup over `x_grid` of the exit-odds ratio,
/// refined by three points along e₁ around the grid argmax.
pub fn rhohat_estimate(spec: &EnvSpec, params: &ExampleParams, budget: &Budget, x_grid: &[Vec<f64>], seed: u64) -> Result<RhohatReport> {
    spec.validate()?;
    ensure(!x_grid.is_empty(), "x_grid", || "empty grid".into())?;
    ensure(x_grid.iter().all(|p| p.len() == spec.dim), "x_grid", || format!("grid points must have dimension {}", spec.dim))?;
    ensure(budget.n_env >= 2 && budget.n_path >= 2, "budget", || "need at least two environments and two paths".into())?;
    let (l, r) = (params.l, params.range);
    let inner = budget.inner();
    let per_env: Vec<Result<RhohatEnv>> = budget.sim.exec.map(budget.n_env, |i| {
        let env = sample_environment(spec, env_seed(seed, i as u64))?;
        let key = StreamKey::new(seed, tag::PATH, i as u64);
        let ratio_at = |x: &[f64], j: u64| -> Result<(f64, f64)> {
            let g = green_op_quenched(&env, &drift_e1, x, l, budget.n_path, &inner, key.child(j))?.estimate.mean;
            Ok((rho_hat_ratio(l, x[0], g), g))
        };
        let mut best = (f64::NEG_INFINITY, 0usize, 0.0);
        for (j, x) in x_grid.iter().enumerate() {
            let (v, g) = ratio_at(x, j as u64)?;
            if v > best.0 {
                best = (v, j, g);
            }
        }
        let mut arg = x_grid[best.1].clone();
        let (mut rho, mut green) = (best.0, best.2);
        let centre = arg.clone();
        for (k, s) in [-1.0, 1.0].into_iter().enumerate() {
            let mut y = centre.clone();
            y[0] = (y[0] + s * r / 4.0).clamp(-r / 2.0, r / 2.0);
            if y[0] == centre[0] {
                continue;
            }
            let (v, g) = ratio_at(&y, (x_grid.len() + k) as u64)?;
            if v > rho {
                (rho, green, arg) = (v, g, y);
            }
        }
        Ok(RhohatEnv { rho_hat: rho, argmax: arg, green_at_argmax: green })
    });
    let per_env: Vec<RhohatEnv> = per_env.into_iter().collect::<Result<_>>()?;
    let vals: Vec<f64> = per_env.iter().map(|e| e.rho_hat).collect();
    let estimate = MCEstimate::from_samples(&vals);
    let moment_2a = MCEstimate::from_samples(&vals.iter().map(|v| v.powf(2.0 * params.a)).collect::<Vec<_>>());
    let cap_applies = l >= 3.0 * r;
    let spacing_ok = (0..spec.dim).all(|a| grid_spacing(x_grid, a) <= r / 2.0 + 1e-12);
    let reach = |axis: usize, half: f64| {
        let lo = x_grid.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min);
        let hi = x_grid.iter().map(|p| p[axis]).fold(f64::NEG_INFINITY, f64::max);
        lo <= -half + 1e-12 && hi >= half - 1e-12
    };
    let grid_covers = spacing_ok && reach(0, r / 2.0) && (1..spec.dim).all(|a| reach(a, params.transverse_cap));
    Ok(RhohatReport {
        l,
        transverse_cap: params.transverse_cap,
        grid_points: x_grid.len(),
        grid_covers,
        cap_violations: if cap_applies { vals.iter().filter(|v| !(**v <= 5.0)).count() } else { 0 },
        below_one: estimate.mean + 3.0 * estimate.stderr < 1.0,
        per_env,
        estimate,
        moment_2a,
        cap_applies,
        regime: params.regime.clone(),
        warning: "the sup over a finite grid can only underestimate the sup over 𝒱".into(),
    })
}
