use super::{sample_environment, Environment, SiteCache, SiteLaw};
use crate::rng::{env_seed, tag, StreamKey};
use crate::stats::MCEstimate;
use rand::Rng;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub n_probe: usize,
    pub max_drift: f64,
    pub drift_bound: f64,
    pub lipschitz_empirical: f64,
    pub lipschitz_bound: f64,
    /// Correlation of `b(0)·e₁` and `b(1.5R e₁)·e₁` across seeds; `None`
    /// when the field has zero variance.
    pub correlation_far: Option<f64>,
    pub correlation_zero: Option<f64>,
    /// `4/√n_probe`, the CLT envelope for the far correlation.
    pub correlation_envelope: f64,
    pub mean_drift: MCEstimate,
    pub target_mean: f64,
    pub zero_variance: bool,
    pub bounded_ok: bool,
    pub lipschitz_ok: bool,
    pub independence_ok: bool,
    pub mean_ok: bool,
}

impl AxiomReport {
    pub fn all_ok(&self) -> bool {
        self.bounded_ok && self.lipschitz_ok && self.independence_ok && self.mean_ok
    }
}

/// Probes boundedness and the Lipschitz bound on `env`, and independence
/// and the mean over `n_probe` environments of the same spec seeded from
/// `env.seed()`.
pub fn verify_env_axioms(env: &Environment, n_probe: usize) -> AxiomReport {
    assert!(n_probe >= 100, "n_probe must be at least 100");
    let spec = env.spec();
    let d = spec.dim;
    let mut rng = StreamKey::new(env.seed(), tag::PROBE, 0).rng(0);
    let mut cache = SiteCache::new(d);
    let (mut b0, mut b1) = (vec![0.0; d], vec![0.0; d]);
    let h = 1e-3;
    let mut max_drift: f64 = 0.0;
    let mut lip: f64 = 0.0;
    for _ in 0..n_probe {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
        let mut u: Vec<f64> = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
        let nu = u.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-12);
        u.iter_mut().for_each(|c| *c /= nu);
        env.drift_into(&x, &mut cache, &mut b0);
        let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + h * b).collect();
        env.drift_into(&y, &mut cache, &mut b1);
        max_drift = max_drift.max(norm(&b0));
        let diff: f64 = b0.iter().zip(&b1).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        lip = lip.max(diff / h);
    }

    let far = 1.5 * spec.range;
    let mut xs = Vec::with_capacity(n_probe);
    let mut ys = Vec::with_capacity(n_probe);
    let origin = vec![0.0; d];
    let mut far_pt = vec![0.0; d];
    far_pt[0] = far;
    for k in 0..n_probe {
        let e = sample_environment(spec, env_seed(env.seed(), k as u64)).expect("spec validated");
        let e = if env.is_mirrored() { e.mirrored() } else { e };
        let mut c = SiteCache::new(d);
        e.drift_into(&origin, &mut c, &mut b0);
        e.drift_into(&far_pt, &mut c, &mut b1);
        xs.push(b0[0]);
        ys.push(b1[0]);
    }
    let zero_variance = spec.site_law == SiteLaw::Constant || spec.drift_bound == 0.0;
    let (correlation_far, correlation_zero) = if zero_variance { (None, None) } else { (pearson(&xs, &ys), pearson(&xs, &xs)) };
    let envelope = 4.0 / (n_probe as f64).sqrt();
    let mean_drift = MCEstimate::from_samples(&xs);
    let target = if env.is_mirrored() { -spec.mean_drift } else { spec.mean_drift };
    let bound = spec.drift_lipschitz();
    AxiomReport {
        n_probe,
        max_drift,
        drift_bound: spec.drift_bound,
        lipschitz_empirical: lip,
        lipschitz_bound: bound,
        correlation_far,
        correlation_zero,
        correlation_envelope: envelope,
        mean_ok: zero_variance && (mean_drift.mean - target).abs() < 1e-12 || mean_drift.within(target, 3.0, 0.0),
        mean_drift,
        target_mean: target,
        zero_variance,
        bounded_ok: max_drift <= spec.drift_bound * (1.0 + 1e-12),
        lipschitz_ok: lip <= bound * (1.0 + 1e-2) + 1e-12,
        independence_ok: correlation_far.is_none_or(|c| c.abs() < envelope),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvSpec;

    #[test]
    fn random_field_passes() {
        let e = sample_environment(&EnvSpec::new(2, 0.2, 0.05), 17).unwrap();
        let r = verify_env_axioms(&e, 500);
        assert!(r.all_ok(), "{r:?}");
        assert!((r.correlation_zero.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_field_is_flagged() {
        let e = sample_environment(&EnvSpec::constant(2, 0.1), 1).unwrap();
        let r = verify_env_axioms(&e, 100);
        assert!(r.zero_variance && r.correlation_far.is_none());
        assert!(r.all_ok());
    }
}
