use super::moments::{sample_rho, Budget};
use crate::env::EnvSpec;
use crate::error::{ensure, Result};
use crate::sde::Domain;
use crate::stats::MCEstimate;
use serde::Serialize;

pub const HIERARCHY_V: f64 = 8.0;
pub const HIERARCHY_ALPHA: f64 = 240.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Level {
    pub k: usize,
    pub l: f64,
    pub l_tilde: f64,
    /// `N_k = L_{k+1}/L_k`.
    pub n: f64,
    pub a: f64,
    pub u: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxHierarchy {
    pub l0: f64,
    pub l_tilde0: f64,
    pub u0: f64,
    pub a0: f64,
    pub v: f64,
    pub alpha: f64,
    pub levels: Vec<Level>,
}

/// Levels `0..=k_max` of the renormalisation scales.
pub fn build_hierarchy(l0: f64, l_tilde0: f64, u0: f64, a0: f64, range: f64, k_max: usize) -> Result<BoxHierarchy> {
    ensure(u0 > 0.0 && u0 <= 1.0, "u0", || format!("u0 = {u0} outside (0, 1]"))?;
    ensure(a0 > 0.0 && a0 <= 1.0, "a0", || format!("a0 = {a0} outside (0, 1]"))?;
    ensure(l_tilde0 >= range + 2.0 && l_tilde0 <= l0.powi(3), "l_tilde0", || {
        format!("L̃0 = {l_tilde0} outside [R + 2, L0³] = [{}, {}]", range + 2.0, l0.powi(3))
    })?;
    let (v, alpha) = (HIERARCHY_V, HIERARCHY_ALPHA);
    let mut levels = Vec::with_capacity(k_max + 1);
    let mut l = l0;
    for k in 0..=k_max {
        let n = alpha / u0 * v.powi(k as i32);
        levels.push(Level { k, l, l_tilde: (l / l0).powi(3) * l_tilde0, n, a: a0 * 0.5f64.powi(k as i32), u: u0 * v.powi(-(k as i32)) });
        l *= n;
    }
    Ok(BoxHierarchy { l0, l_tilde0, u0, a0, v, alpha, levels })
}

impl BoxHierarchy {
    /// `L_k = (α/u0)^k v^{k(k−1)/2} L0`.
    pub fn closed_form_l(&self, k: usize) -> f64 {
        (self.alpha / self.u0).powi(k as i32) * self.v.powi((k * k.saturating_sub(1) / 2) as i32) * self.l0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelStatus {
    Resolved,
    /// Simulated, but `κ^{u_k L_k}` lies below the smallest moment the path
    /// budget can distinguish from zero.
    Unresolved,
    /// Expected step count beyond the budget; not simulated.
    Infeasible,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecursionRow {
    pub level: Level,
    pub target: f64,
    pub moment: Option<MCEstimate>,
    /// `φ_k = c₃L̃_{k+1}^{d−1}L_k·E[ρ_k^{a_k}]`.
    pub phi: Option<MCEstimate>,
    pub status: LevelStatus,
    pub pass: Option<bool>,
}

pub fn check_recursion(
    spec: &EnvSpec,
    hier: &BoxHierarchy,
    k_max: usize,
    kappa: f64,
    c3: f64,
    budget: &Budget,
    max_steps: f64,
    seed: u64,
) -> Result<Vec<RecursionRow>> {
    ensure(k_max <= 2, "k_max", || format!("k_max = {k_max} > 2 is beyond desk scale"))?;
    ensure(hier.levels.len() >= k_max + 2, "hierarchy", || "hierarchy needs level k_max + 1".into())?;
    let d = spec.dim as i32;
    let mut rows = Vec::new();
    for k in 0..=k_max {
        let level = hier.levels[k].clone();
        let next_lt = hier.levels[k + 1].l_tilde;
        let target = kappa.powf(level.u * level.l);
        let prefactor = c3 * next_lt.powi(d - 1) * level.l;
        // Exit time scale: ballistic crossing or diffusive, whichever is shorter.
        let speed = spec.mean_drift.abs().max(1e-12);
        let horizon = (2.0 * level.l / speed).min((2.0 * level.l).powi(2));
        let steps = budget.n_env as f64 * budget.n_path as f64 * horizon / budget.sim.dt;
        if steps > max_steps {
            rows.push(RecursionRow { level, target, moment: None, phi: None, status: LevelStatus::Infeasible, pass: None });
            continue;
        }
        let dom = Domain::hierarchy_box(spec.dim, level.l, level.l_tilde, spec.range);
        let m = sample_rho(spec, &dom, kappa, budget, crate::rng::hash_words(&[seed, k as u64]))?.moment(level.a).estimate;
        let phi = m.scale(prefactor);
        // Smallest resolvable moment: one back exit in every environment.
        let floor = (0.5 / (budget.n_path as f64 + 0.5)).powf(level.a) * prefactor;
        let (status, pass) =
            if target < floor { (LevelStatus::Unresolved, None) } else { (LevelStatus::Resolved, Some(phi.mean + 3.0 * phi.stderr <= target)) };
        rows.push(RecursionRow { level, target, moment: Some(m), phi: Some(phi), status, pass });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_arithmetic() {
        let h = build_hierarchy(300.0, 10.0, 1.0, 1.0, 3.0, 3).unwrap();
        assert_eq!(h.levels[0].l, 300.0);
        assert_eq!(h.levels[0].n, 240.0);
        assert_eq!(h.levels[1].l, 72000.0);
        assert_eq!(h.levels[3].a, 0.125);
        assert_eq!(h.levels[2].u, 1.0 / 64.0);
        for k in 0..=3 {
            assert_eq!(h.levels[k].l, h.closed_form_l(k));
            assert_eq!(h.levels[k].l_tilde, (h.levels[k].l / 300.0).powi(3) * 10.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_hierarchy(10.0, 1.0, 1.0, 1.0, 3.0, 1).is_err());
        assert!(build_hierarchy(10.0, 6.0, 1.5, 1.0, 3.0, 1).is_err());
        assert!(build_hierarchy(10.0, 6.0, 1.0, 0.0, 3.0, 1).is_err());
    }
}
