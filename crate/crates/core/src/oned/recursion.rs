use super::scale::ScaleProfile;
use crate::env::{sample_environment, EnvSpec};
use crate::error::{ensure, Result};
use crate::exec::Exec;
use crate::rng::env_seed;
use crate::stats::{line_fit, MCEstimate};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaSeed {
    /// `η = q` at the right edge (absorbing truncation).
    Absorbing,
    /// `η = min(q/p, 1)` at the right edge, the constant-drift fixed point.
    FixedPoint,
}

/// Sequences over one environment, indexed by `n = −N, …, N`.
#[derive(Clone, Debug, Serialize)]
pub struct EtaDeltaSequences {
    pub n_window: i64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub rho_hat: Vec<f64>,
    pub eta: Vec<f64>,
    pub log_delta: Vec<f64>,
}

impl EtaDeltaSequences {
    pub fn at(&self, v: &[f64], n: i64) -> f64 {
        v[(n + self.n_window) as usize]
    }

    /// Per-step growth of `log δ` moving left over `[−N, 0]`.
    pub fn left_slope(&self) -> f64 {
        let xs: Vec<f64> = (-self.n_window..=0).map(|n| n as f64).collect();
        let ys: Vec<f64> = (-self.n_window..=0).map(|n| self.at(&self.log_delta, n)).collect();
        -line_fit(&xs, &ys).slope
    }
}

/// `η_n = q_n/(1 − p_nη_{n+1})` and `δ_n = ρ̂(n)⁻¹η_nδ_{n+1}` for one
/// environment; `p_n`, `q_n` are exact scale-function ratios for slabs at
/// `nL₀`.
pub fn eta_delta_sequences(profile: &ScaleProfile, l0: f64, n_window: i64, seed_rule: EtaSeed) -> EtaDeltaSequences {
    let m = (2 * n_window + 1) as usize;
    // log(s((n+1)L₀) − s(nL₀)) for n = −N−1, …, N.
    let inc: Vec<f64> = (-n_window - 1..=n_window).map(|n| profile.log_increment(n as f64 * l0, (n + 1) as f64 * l0)).collect();
    let rho_hat: Vec<f64> = (0..m).map(|k| (inc[k + 1] - inc[k]).exp()).collect();
    let p: Vec<f64> = rho_hat.iter().map(|r| 1.0 / (1.0 + r)).collect();
    let q: Vec<f64> = rho_hat.iter().map(|r| r / (1.0 + r)).collect();
    let mut eta = vec![0.0; m];
    eta[m - 1] = match seed_rule {
        EtaSeed::Absorbing => q[m - 1],
        EtaSeed::FixedPoint => rho_hat[m - 1].min(1.0),
    };
    for k in (0..m - 1).rev() {
        eta[k] = q[k] / (1.0 - p[k] * eta[k + 1]);
    }
    let mut log_delta = vec![0.0; m];
    log_delta[m - 1] = (1.0 - eta[m - 1]).max(f64::MIN_POSITIVE).ln();
    for k in (0..m - 1).rev() {
        log_delta[k] = -rho_hat[k].ln() + eta[k].ln() + log_delta[k + 1];
    }
    EtaDeltaSequences { n_window, p, q, rho_hat, eta, log_delta }
}

#[derive(Clone, Debug, Serialize)]
pub struct RecursionReport {
    pub l0: f64,
    pub n_window: i64,
    pub n_env: usize,
    pub seed_rule: EtaSeed,
    /// Per-step growth rate of `log δ_n` moving away from the seeded edge.
    pub slope: MCEstimate,
    /// `Ê[−log ρ̂(0)] + Ê[log η₀]`.
    pub predicted: MCEstimate,
    pub eta_center: MCEstimate,
    pub pass: bool,
    /// One environment's sequences, for output.
    pub example: EtaDeltaSequences,
}

pub fn eta_delta_recursion(
    spec: &EnvSpec,
    l0: f64,
    n_window: i64,
    n_env: usize,
    quad_step: f64,
    seed_rule: EtaSeed,
    seed: u64,
    exec: &Exec,
) -> Result<RecursionReport> {
    ensure(spec.dim == 1, "dim", || "the η recursion is one-dimensional".into())?;
    ensure(n_window >= 50, "n_window", || format!("window {n_window} < 50: truncation seeding has not decayed"))?;
    ensure(n_env >= 2, "n_env", || "need at least two environments".into())?;
    ensure(l0 > 0.0, "l0", || "L0 must be positive".into())?;
    spec.validate()?;
    let reach = (n_window + 2) as f64 * l0;
    let seqs: Vec<Result<EtaDeltaSequences>> = exec.map(n_env, |i| {
        let env = sample_environment(spec, env_seed(seed, i as u64))?;
        let p = ScaleProfile::new(&env, reach, quad_step)?;
        Ok(eta_delta_sequences(&p, l0, n_window, seed_rule))
    });
    let seqs: Vec<EtaDeltaSequences> = seqs.into_iter().collect::<Result<_>>()?;
    let slopes: Vec<f64> = seqs.iter().map(|s| s.left_slope()).collect();
    let pred: Vec<f64> = seqs.iter().map(|s| -s.at(&s.rho_hat, 0).ln() + s.at(&s.eta, 0).ln()).collect();
    let etas: Vec<f64> = seqs.iter().map(|s| s.at(&s.eta, 0)).collect();
    let slope = MCEstimate::from_samples(&slopes);
    let predicted = MCEstimate::from_samples(&pred);
    let pass = (slope.mean - predicted.mean).abs() <= 3.0 * slope.stderr.hypot(predicted.stderr) + 1e-9;
    Ok(RecursionReport {
        l0,
        n_window,
        n_env,
        seed_rule,
        slope,
        predicted,
        eta_center: MCEstimate::from_samples(&etas),
        pass,
        example: seqs.into_iter().next().expect("n_env ≥ 2"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_drift_fixed_point() {
        let beta = 0.1;
        let l0 = 3.0;
        let r = eta_delta_recursion(&EnvSpec::constant(1, beta), l0, 60, 2, 1e-3, EtaSeed::Absorbing, 0, &Exec::sequential()).unwrap();
        assert!((r.eta_center.mean - (-2.0 * beta * l0).exp()).abs() < 1e-6);
    }

    #[test]
    fn recurrent_case() {
        let r = eta_delta_recursion(&EnvSpec::brownian(1), 2.0, 60, 2, 1e-3, EtaSeed::Absorbing, 0, &Exec::sequential()).unwrap();
        let s = &r.example;
        assert!(s.at(&s.eta, 0) > 0.98);
        assert!(s.at(&s.log_delta, 0) < (0.02f64).ln());
        let f = eta_delta_recursion(&EnvSpec::brownian(1), 2.0, 60, 2, 1e-3, EtaSeed::FixedPoint, 0, &Exec::sequential()).unwrap();
        assert_eq!(f.eta_center.mean, 1.0);
    }

    #[test]
    fn delta_identity_holds() {
        let spec = EnvSpec::new(1, 0.2, 0.05);
        let env = sample_environment(&spec, 3).unwrap();
        let p = ScaleProfile::new(&env, 3.0 * 62.0, 1e-3).unwrap();
        let s = eta_delta_sequences(&p, 3.0, 60, EtaSeed::Absorbing);
        for n in -50..50 {
            let d = (1.0 - s.at(&s.eta, n)).ln();
            assert!((d - s.at(&s.log_delta, n)).abs() < 1e-8, "n={n}");
        }
    }
}
