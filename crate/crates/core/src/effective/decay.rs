use super::moments::Budget;
use crate::env::{sample_environment, EnvSpec};
use crate::error::{ensure, Result};
use crate::rng::{env_seed, tag, StreamKey};
use crate::sde::{exit_counts, Domain, FaceCounts};
use crate::stats::{line_fit, origin_fit, LineFit, MCEstimate};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub l: f64,
    /// Annealed `P̂₀[T̃_{−bL} < T_L]`.
    pub estimate: MCEstimate,
    pub counts: FaceCounts,
    /// Rule-of-three upper bound, set when no path backtracked.
    pub upper_bound: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayScan {
    pub b_back: f64,
    pub rows: Vec<DecayRow>,
    /// `c` in `−log P̂ = c·L` (least squares through the origin).
    pub rate: Option<(f64, f64)>,
    /// `log(−log P̂) = log c + γ log L`.
    pub power_fit: Option<LineFit>,
    pub diagnostic: Option<String>,
}

/// Annealed backtrack probabilities along `e₁` for each `L` and their decay
/// fit.
pub fn slab_exit_decay_scan(spec: &EnvSpec, b_back: f64, l_list: &[f64], budget: &Budget, seed: u64) -> Result<DecayScan> {
    spec.validate()?;
    budget.check()?;
    ensure(b_back > 0.0, "b_back", || "b must be positive".into())?;
    ensure(l_list.len() >= 3 && l_list.windows(2).all(|w| w[0] < w[1]) && l_list[0] > 0.0, "L_list", || {
        "need at least three increasing positive L values".into()
    })?;
    let mut direction = vec![0.0; spec.dim];
    direction[0] = 1.0;
    let origin = vec![0.0; spec.dim];
    let inner = budget.inner();
    let mut rows = Vec::new();
    for (li, &l) in l_list.iter().enumerate() {
        let dom = Domain::Thresholds { direction: direction.clone(), lo: -b_back * l, hi: l };
        let per_env: Vec<Result<FaceCounts>> = budget.sim.exec.map(budget.n_env, |i| {
            let env = sample_environment(spec, env_seed(seed, i as u64))?;
            let key = StreamKey::new(crate::rng::hash_words(&[seed, li as u64]), tag::PATH, i as u64);
            let c = exit_counts(&env, &origin, &dom, budget.n_path, &inner, key)?;
            c.check()?;
            Ok(c)
        });
        let per_env: Vec<FaceCounts> = per_env.into_iter().collect::<Result<_>>()?;
        let mut counts = FaceCounts::default();
        let freq: Vec<f64> = per_env
            .iter()
            .map(|c| {
                counts.positive += c.positive;
                counts.negative += c.negative;
                counts.lateral += c.lateral;
                counts.timeout += c.timeout;
                c.negative as f64 / c.completed().max(1) as f64
            })
            .collect();
        let estimate = MCEstimate::from_samples(&freq);
        let upper_bound = (counts.negative == 0).then(|| 3.0 / counts.completed().max(1) as f64);
        rows.push(DecayRow { l, estimate, counts, upper_bound });
    }
    let usable: Vec<&DecayRow> = rows.iter().filter(|r| r.upper_bound.is_none()).collect();
    let mut diagnostic = None;
    let (mut rate, mut power_fit) = (None, None);
    if usable.len() < 2 {
        diagnostic = Some(format!("only {} L values with a nonzero estimate", usable.len()));
    } else if usable.iter().all(|r| r.estimate.mean >= 0.5) {
        diagnostic = Some("backtracking is not rare (P̂ ≥ 1/2 at every L): no decay to fit".into());
    } else {
        let x: Vec<f64> = usable.iter().map(|r| r.l).collect();
        let y: Vec<f64> = usable.iter().map(|r| -r.estimate.mean.ln()).collect();
        let sy: Vec<f64> = usable.iter().map(|r| (r.estimate.stderr / r.estimate.mean).max(1e-12)).collect();
        let (c, se) = origin_fit(&x, &y, &sy);
        if c <= 0.0 {
            diagnostic = Some(format!("fitted rate {c} is not positive"));
        }
        rate = Some((c, se));
        if y.iter().all(|v| *v > 0.0) {
            let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
            let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
            power_fit = Some(line_fit(&lx, &ly));
        }
    }
    Ok(DecayScan { b_back, rows, rate, power_fit, diagnostic })
}

#[derive(Clone, Debug, Serialize)]
pub struct KappaEstimate {
    pub l_probe: f64,
    /// Per-environment traversal frequencies along `+e₁` then `−e₁`.
    pub traversal: Vec<MCEstimate>,
    /// `min_env P̂^{1/(L+1)}` per direction.
    pub c_worst: [f64; 2],
    pub c_mean: [f64; 2],
    /// `min(ĉ, 1/2)` over both directions.
    pub kappa: f64,
    pub warning: &'static str,
}

/// Per-unit-length traversal probability of the tube `C_L` along `±e₁`.
pub fn estimate_kappa(spec: &EnvSpec, l_probe: f64, budget: &Budget, seed: u64) -> Result<KappaEstimate> {
    spec.validate()?;
    budget.check()?;
    ensure(l_probe >= 1.0, "L_probe", || format!("L_probe = {l_probe} < 1"))?;
    let tube = Domain::traversal_tube(spec.dim, l_probe);
    let origin = vec![0.0; spec.dim];
    let inner = budget.inner();
    let mut traversal = Vec::new();
    let mut c_worst = [0.0; 2];
    let mut c_mean = [0.0; 2];
    for (di, dom) in [tube.clone(), tube.mirrored()].iter().enumerate() {
        let per_env: Vec<Result<MCEstimate>> = budget.sim.exec.map(budget.n_env, |i| {
            let env = sample_environment(spec, env_seed(seed, i as u64))?;
            let key = StreamKey::new(crate::rng::hash_words(&[seed, di as u64]), tag::PROBE, i as u64);
            let c = exit_counts(&env, &origin, dom, budget.n_path, &inner, key)?;
            c.check()?;
            Ok(MCEstimate::proportion(c.positive, c.completed()))
        });
        let per_env: Vec<MCEstimate> = per_env.into_iter().collect::<Result<_>>()?;
        let cs: Vec<f64> = per_env.iter().map(|p| p.mean.powf(1.0 / (l_probe + 1.0))).collect();
        c_worst[di] = cs.iter().cloned().fold(f64::INFINITY, f64::min);
        c_mean[di] = cs.iter().sum::<f64>() / cs.len() as f64;
        traversal.extend(per_env);
    }
    Ok(KappaEstimate {
        l_probe,
        traversal,
        kappa: c_worst[0].min(c_worst[1]).min(0.5),
        c_worst,
        c_mean,
        warning: "κ̂ estimates an infimum over environments and is anti-conservative",
    })
}
