use super::scale::{log_rho_l, ScaleProfile};
use crate::env::{sample_environment, DiffusionMode, EnvSpec};
use crate::error::{ensure, Result};
use crate::exec::Exec;
use crate::rng::{env_seed, tag, StreamKey};
use crate::sde::{run_observed, Domain};
use crate::stats::MCEstimate;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Identity275Report {
    pub l: f64,
    pub n_env: usize,
    /// `Ê[log ρ_L]`, exact per environment.
    pub lhs: MCEstimate,
    /// `−2L·Ê[b/a]`, with `Ê[b/a]` the spatial mean over `(−L, 0)` per
    /// environment.
    pub rhs: MCEstimate,
    /// Paired per-environment difference of the two sides.
    pub difference: MCEstimate,
    /// `−2Lλ` in identity-diffusion mode, where `E[b/a] = λ` exactly.
    pub exact_rhs: Option<f64>,
    pub quadrature_bound: f64,
    pub pass: bool,
}

/// `E[log ρ_L] = −2L·E[b(0)/a(0)]` over `n_env` environments.
pub fn check_identity_275(spec: &EnvSpec, l: f64, n_env: usize, quad_step: f64, seed: u64, exec: &Exec) -> Result<Identity275Report> {
    ensure(spec.dim == 1, "dim", || "identity (2.75) is one-dimensional".into())?;
    ensure(n_env >= 2, "n_env", || "need at least two environments".into())?;
    spec.validate()?;
    let per_env: Vec<Result<(f64, f64, f64)>> = exec.map(n_env, |i| {
        let env = sample_environment(spec, env_seed(seed, i as u64))?;
        let p = ScaleProfile::new(&env, l, quad_step)?;
        let lr = log_rho_l(&p, l);
        // B(−L) = −∫_{−L}^0 2b/a.
        let rhs = p.potential(-l);
        let bound = p.potential_error_bound(l) + (p.error_bound(l) / p.value(l)).abs() + (p.error_bound(-l) / p.value(-l)).abs();
        Ok((lr, rhs, bound))
    });
    let per_env: Vec<(f64, f64, f64)> = per_env.into_iter().collect::<Result<_>>()?;
    let lhs: Vec<f64> = per_env.iter().map(|t| t.0).collect();
    let rhs: Vec<f64> = per_env.iter().map(|t| t.1).collect();
    let diff: Vec<f64> = per_env.iter().map(|t| t.0 - t.1).collect();
    let quadrature_bound = per_env.iter().map(|t| t.2).fold(0.0, f64::max);
    let difference = MCEstimate::from_samples(&diff);
    let tol = 3.0 * difference.stderr + quadrature_bound;
    let exact_rhs = (spec.diffusion == DiffusionMode::Identity).then(|| -2.0 * l * spec.mean_drift);
    Ok(Identity275Report {
        l,
        n_env,
        lhs: MCEstimate::from_samples(&lhs),
        rhs: MCEstimate::from_samples(&rhs),
        pass: difference.mean.abs() <= tol,
        difference,
        exact_rhs,
        quadrature_bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Transient towards `+∞`.
    Positive,
    /// Transient towards `−∞`.
    Negative,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    pub l: f64,
    pub a_grid: Vec<f64>,
    /// `Ê[ρ_L^a]` for each `a`.
    pub moments: Vec<MCEstimate>,
    /// `Ê[ρ_L^{−a}]` for each `a`.
    pub inverse_moments: Vec<MCEstimate>,
    pub mean_log_rho: MCEstimate,
    pub horizon: f64,
    pub fraction_right: MCEstimate,
    pub fraction_left: MCEstimate,
    pub verdict_moments: Verdict,
    pub verdict_log: Verdict,
    pub verdict_paths: Verdict,
    pub agreement: bool,
    /// The overall verdict follows condition (ii).
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug)]
pub struct DichotomyBudget {
    pub n_env: usize,
    pub horizon: f64,
    pub dt: f64,
    pub quad_step: f64,
}

/// Conditions (i) `inf_a E[ρ_L^a] < 1`, (ii) `E[log ρ_L] < 0` and
/// (v) `X_t → +∞`, each with its mirror, on independent estimators.
pub fn solomon_dichotomy(spec: &EnvSpec, l: f64, a_grid: &[f64], budget: &DichotomyBudget, seed: u64, exec: &Exec) -> Result<DichotomyReport> {
    ensure(spec.dim == 1, "dim", || "the dichotomy is one-dimensional".into())?;
    ensure(l > spec.range, "L", || format!("L = {l} must exceed R = {}", spec.range))?;
    ensure(!a_grid.is_empty() && a_grid.iter().all(|a| *a > 0.0 && *a <= 1.0), "a_grid", || "a must lie in (0, 1]".into())?;
    ensure(budget.n_env >= 2 && budget.horizon > 0.0, "n_env", || "need environments and a positive horizon".into())?;
    spec.validate()?;
    let key = StreamKey::new(seed, tag::PATH, 0);
    let far = Domain::Interval { half_width: 1e12 }.compile(1)?;
    let per_env: Vec<Result<(f64, f64)>> = exec.map(budget.n_env, |i| {
        let env = sample_environment(spec, env_seed(seed, i as u64))?;
        let p = ScaleProfile::new(&env, l, budget.quad_step)?;
        let lr = log_rho_l(&p, l);
        let mut rng = key.rng(i as u64);
        let r = run_observed(&env, &[0.0], &far, budget.dt, &mut rng, budget.horizon, &mut ())?;
        Ok((lr, r.exit_point[0]))
    });
    let per_env: Vec<(f64, f64)> = per_env.into_iter().collect::<Result<_>>()?;
    let logs: Vec<f64> = per_env.iter().map(|t| t.0).collect();
    let ends: Vec<f64> = per_env.iter().map(|t| t.1).collect();
    let moments: Vec<MCEstimate> =
        a_grid.iter().map(|a| MCEstimate::from_samples(&logs.iter().map(|lr| (a * lr).exp()).collect::<Vec<_>>())).collect();
    let inverse_moments: Vec<MCEstimate> =
        a_grid.iter().map(|a| MCEstimate::from_samples(&logs.iter().map(|lr| (-a * lr).exp()).collect::<Vec<_>>())).collect();
    let mean_log_rho = MCEstimate::from_samples(&logs);
    let n = ends.len();
    let fraction_right = MCEstimate::proportion(ends.iter().filter(|x| **x > l).count(), n);
    let fraction_left = MCEstimate::proportion(ends.iter().filter(|x| **x < -l).count(), n);

    let below_one = |ms: &[MCEstimate]| ms.iter().any(|m| m.mean + 3.0 * m.stderr < 1.0);
    let verdict_moments = match (below_one(&moments), below_one(&inverse_moments)) {
        (true, false) => Verdict::Positive,
        (false, true) => Verdict::Negative,
        _ => Verdict::Inconclusive,
    };
    let (lo, hi) = mean_log_rho.ci(3.0);
    let verdict_log = if hi < 0.0 {
        Verdict::Positive
    } else if lo > 0.0 {
        Verdict::Negative
    } else {
        Verdict::Inconclusive
    };
    let verdict_paths = if fraction_right.mean - 3.0 * fraction_right.stderr > 0.5 {
        Verdict::Positive
    } else if fraction_left.mean - 3.0 * fraction_left.stderr > 0.5 {
        Verdict::Negative
    } else {
        Verdict::Inconclusive
    };
    let agreement = verdict_moments == verdict_log && verdict_log == verdict_paths;
    Ok(DichotomyReport {
        l,
        a_grid: a_grid.to_vec(),
        moments,
        inverse_moments,
        mean_log_rho,
        horizon: budget.horizon,
        fraction_right,
        fraction_left,
        verdict_moments,
        verdict_log,
        verdict_paths,
        agreement,
        verdict: verdict_log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_drift_both_sides_exact() {
        let spec = EnvSpec::constant(1, 0.1);
        let r = check_identity_275(&spec, 5.0, 4, 1e-3, 1, &Exec::sequential()).unwrap();
        assert!((r.lhs.mean + 1.0).abs() < 1e-9 && (r.rhs.mean + 1.0).abs() < 1e-9);
        assert_eq!(r.exact_rhs, Some(-1.0));
        assert!(r.pass);
    }

    #[test]
    fn brownian_identity_is_zero() {
        let r = check_identity_275(&EnvSpec::brownian(1), 3.0, 3, 1e-3, 1, &Exec::sequential()).unwrap();
        assert!(r.lhs.mean.abs() < 1e-12 && r.rhs.mean.abs() < 1e-12);
    }
}
