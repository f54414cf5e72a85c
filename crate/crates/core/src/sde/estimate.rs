use super::domain::{dot, CompiledDomain, Domain, FaceLabel};
use super::path::{default_max_time, run_observed, ExitRecord, PathObserver};
use crate::env::Environment;
use crate::error::{ensure, Error, Result};
use crate::exec::Exec;
use crate::rng::StreamKey;
use crate::stats::MCEstimate;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Largest tolerated fraction of timed-out paths.
pub const MAX_TIMEOUT_FRACTION: f64 = 1e-3;

/// Discretisation and execution settings shared by the estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sim {
    pub dt: f64,
    pub max_time: Option<f64>,
    pub exec: Exec,
}

impl Sim {
    pub fn new(dt: f64) -> Self {
        Sim { dt, max_time: None, exec: Exec::default() }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_max_time(mut self, t: f64) -> Self {
        self.max_time = Some(t);
        self
    }

    pub(crate) fn horizon(&self, dom: &CompiledDomain, env: &Environment) -> f64 {
        self.max_time.unwrap_or_else(|| default_max_time(dom, env.spec().ellipticity))
    }
}

/// Runs `f(i)` for `i < n` under `exec`, keeping index order; the first
/// error (by index) wins.
pub fn map_paths<T, F>(n: usize, exec: &Exec, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    exec.map(n, f).into_iter().collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaceCounts {
    pub positive: usize,
    pub negative: usize,
    pub lateral: usize,
    pub timeout: usize,
}

impl FaceCounts {
    pub fn add(&mut self, face: FaceLabel) {
        match face {
            FaceLabel::Positive => self.positive += 1,
            FaceLabel::Negative => self.negative += 1,
            FaceLabel::Lateral => self.lateral += 1,
            FaceLabel::Timeout => self.timeout += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.positive + self.negative + self.lateral + self.timeout
    }

    pub fn completed(&self) -> usize {
        self.positive + self.negative + self.lateral
    }

    /// Paths leaving through the non-positive boundary.
    pub fn non_positive(&self) -> usize {
        self.negative + self.lateral
    }

    pub fn timeout_fraction(&self) -> f64 {
        self.timeout as f64 / self.total().max(1) as f64
    }

    /// Refuses aggregation when too many paths timed out.
    pub fn check(&self) -> Result<()> {
        if self.timeout_fraction() > MAX_TIMEOUT_FRACTION {
            return Err(Error::refused(format!("{} of {} paths timed out (limit fraction {MAX_TIMEOUT_FRACTION})", self.timeout, self.total())));
        }
        Ok(())
    }
}

/// Simulates `n` paths from `x0`, each observed by a fresh observer from
/// `make`, and returns `(record, observer)` pairs in path order.
pub fn simulate<O, M>(env: &Environment, x0: &[f64], dom: &Domain, n: usize, sim: &Sim, key: StreamKey, make: M) -> Result<Vec<(ExitRecord, O)>>
where
    O: PathObserver + Send,
    M: Fn() -> O + Sync + Send,
{
    let c = dom.compile(env.dim())?;
    let horizon = sim.horizon(&c, env);
    map_paths(n, &sim.exec, |i| {
        let mut rng = key.rng(i as u64);
        let mut o = make();
        let r = run_observed(env, x0, &c, sim.dt, &mut rng, horizon, &mut o)?;
        Ok((r, o))
    })
}

pub fn exit_counts(env: &Environment, x0: &[f64], dom: &Domain, n: usize, sim: &Sim, key: StreamKey) -> Result<FaceCounts> {
    let recs = simulate(env, x0, dom, n, sim, key, || ())?;
    let mut c = FaceCounts::default();
    for (r, _) in &recs {
        c.add(r.face);
    }
    Ok(c)
}

/// The exit-time bracket `⅔(L² − x₁²) ≤ E T_𝒮 ≤ 2(L² − x₁²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitTimeEstimate {
    pub estimate: MCEstimate,
    pub counts: FaceCounts,
    /// Present for slabs with `|b| ≤ ε` and `L ≤ 1/(4ε)`.
    pub bracket: Option<Bracket>,
}

pub fn mean_exit_time(env: &Environment, x0: &[f64], dom: &Domain, n: usize, sim: &Sim, key: StreamKey) -> Result<ExitTimeEstimate> {
    ensure(n >= 2, "n", || "need at least two paths".into())?;
    let recs = simulate(env, x0, dom, n, sim, key, || ())?;
    let mut counts = FaceCounts::default();
    for (r, _) in &recs {
        counts.add(r.face);
    }
    counts.check()?;
    let times: Vec<f64> = recs.iter().filter(|(r, _)| r.face != FaceLabel::Timeout).map(|(r, _)| r.exit_time).collect();
    let estimate = MCEstimate::from_samples(&times);
    let bracket = match dom {
        Domain::Slab { half_width: l } => {
            let eps = env.spec().drift_bound;
            if eps == 0.0 || *l <= 1.0 / (4.0 * eps) {
                let base = l * l - x0[0] * x0[0];
                let (lo, hi) = ((2.0 / 3.0) * base, 2.0 * base);
                let (a, b) = estimate.ci(3.0);
                Some(Bracket { lower: lo, upper: hi, within: b >= lo && a <= hi })
            } else {
                None
            }
        }
        _ => None,
    };
    Ok(ExitTimeEstimate { estimate, counts, bracket })
}

/// Smoothed odds `(k_q + s)/(k_p + s)` capped at `cap`.
pub fn smoothed_rho(k_p: usize, k_q: usize, smoothing: f64, cap: f64) -> f64 {
    ((k_q as f64 + smoothing) / (k_p as f64 + smoothing)).min(cap)
}

/// The ellipticity cap `κ^{−(L+3)}` on `ρ_B`.
pub fn rho_cap(kappa: f64, l: f64) -> f64 {
    kappa.powf(-(l + 3.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitStats {
    pub counts: FaceCounts,
    pub p_hat: MCEstimate,
    pub q_hat: MCEstimate,
    /// Add-½ smoothed and capped odds.
    pub rho_hat: f64,
    /// Delta-method standard error of `rho_hat`.
    pub rho_stderr: f64,
    /// Add-1 smoothing, for the sensitivity band.
    pub rho_add_one: f64,
    pub cap: f64,
    pub capped: bool,
    /// Every completed path left through one side only.
    pub zero_count: bool,
}

impl ExitStats {
    pub fn from_counts(counts: FaceCounts, cap: f64) -> Result<Self> {
        counts.check()?;
        let n = counts.completed();
        if n == 0 {
            return Err(Error::refused("no completed paths"));
        }
        let (kp, kq) = (counts.positive, counts.non_positive());
        let raw = smoothed_rho(kp, kq, 0.5, f64::INFINITY);
        let rho_hat = raw.min(cap);
        let (ps, qs) = ((kp as f64 + 0.5) / (n as f64 + 1.0), (kq as f64 + 0.5) / (n as f64 + 1.0));
        Ok(ExitStats {
            counts,
            p_hat: MCEstimate::proportion(kp, n),
            q_hat: MCEstimate::proportion(kq, n),
            rho_hat,
            rho_stderr: rho_hat / (n as f64 * ps * qs).sqrt(),
            rho_add_one: smoothed_rho(kp, kq, 1.0, cap),
            cap,
            capped: raw > cap,
            zero_count: kp == 0 || kq == 0,
        })
    }
}

/// Face frequencies and smoothed odds of leaving `dom` through `∂₊`.
/// `cap` is `κ^{−(L+3)}`; pass `f64::INFINITY` for no cap.
pub fn estimate_exit_stats(env: &Environment, x0: &[f64], dom: &Domain, n: usize, sim: &Sim, key: StreamKey, cap: f64) -> Result<ExitStats> {
    ExitStats::from_counts(exit_counts(env, x0, dom, n, sim, key)?, cap)
}

/// Width-`R` slabs `𝒮_i = {|x·ℓ − iL₀| ≤ R/2}` spaced `L₀` apart.
#[derive(Clone, Debug, PartialEq)]
pub struct SlabLadder {
    pub spacing: f64,
    pub width: f64,
    pub direction: Vec<f64>,
}

impl SlabLadder {
    pub fn new(spacing: f64, width: f64, direction: Vec<f64>) -> Result<Self> {
        ensure(spacing > width, "spacing", || format!("L0 = {spacing} must exceed R = {width}"))?;
        let n = direction.iter().map(|c| c * c).sum::<f64>().sqrt();
        Ok(SlabLadder { spacing, width, direction: direction.iter().map(|c| c / n).collect() })
    }

    /// `I(x) = i` iff `x·ℓ − iL₀ ∈ [−L₀/2, L₀/2)`.
    pub fn index_of(&self, x: &[f64]) -> i64 {
        (dot(&self.direction, x) / self.spacing + 0.5).floor() as i64
    }

    pub fn in_slab(&self, i: i64, x: &[f64]) -> bool {
        (dot(&self.direction, x) - i as f64 * self.spacing).abs() <= 0.5 * self.width
    }

    /// Region between the neighbouring slabs of slab `i`.
    pub fn neighbor_domain(&self, i: i64) -> Domain {
        let (l0, r) = (self.spacing, self.width);
        Domain::Thresholds { direction: self.direction.clone(), lo: (i - 1) as f64 * l0 + 0.5 * r, hi: (i + 1) as f64 * l0 - 0.5 * r }
    }
}

/// One transition of the embedded slab chain: runs until `𝒮_{i±1}` is hit,
/// `i = from` or `I(x0)`. Returns `+1`/`−1` and the exit record.
pub fn run_to_neighbor_slab(
    env: &Environment,
    x0: &[f64],
    ladder: &SlabLadder,
    from: Option<i64>,
    dt: f64,
    rng: &mut ChaCha8Rng,
    max_time: Option<f64>,
) -> Result<(i8, ExitRecord)> {
    let i = from.unwrap_or_else(|| ladder.index_of(x0));
    for (side, j) in [(1i8, i + 1), (-1i8, i - 1)] {
        if ladder.in_slab(j, x0) {
            let face = if side > 0 { FaceLabel::Positive } else { FaceLabel::Negative };
            return Ok((side, ExitRecord { exit_point: x0.to_vec(), exit_time: 0.0, face, steps: 0, dt }));
        }
    }
    let dom = ladder.neighbor_domain(i).compile(env.dim())?;
    let horizon = max_time.unwrap_or_else(|| default_max_time(&dom, env.spec().ellipticity));
    let r = run_observed(env, x0, &dom, dt, rng, horizon, &mut ())?;
    let side = match r.face {
        FaceLabel::Positive => 1,
        FaceLabel::Negative => -1,
        _ => 0,
    };
    Ok((side, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{sample_environment, EnvSpec};

    fn seq(dt: f64) -> Sim {
        Sim::new(dt).with_exec(Exec::sequential())
    }

    #[test]
    fn counts_are_exhaustive() {
        let e = sample_environment(&EnvSpec::new(2, 0.2, 0.1), 1).unwrap();
        let dom = Domain::criterion_box(2, 6.0, 2.0, e.spec().range);
        let c = exit_counts(&e, &[0.0, 0.0], &dom, 300, &seq(1e-2), StreamKey::new(1, 0, 0)).unwrap();
        assert_eq!(c.total(), 300);
    }

    #[test]
    fn symmetric_interval() {
        let e = sample_environment(&EnvSpec::brownian(1), 0).unwrap();
        let n = 20_000;
        let c = exit_counts(&e, &[0.0], &Domain::Interval { half_width: 1.0 }, n, &seq(1e-3), StreamKey::new(2, 0, 0)).unwrap();
        let p = MCEstimate::proportion(c.positive, n);
        assert!(p.within(0.5, 3.0, 0.0), "{p:?}");
    }

    #[test]
    fn smoothing_rule() {
        assert_eq!(smoothed_rho(10, 0, 0.5, f64::INFINITY), 0.5 / 10.5);
        assert_eq!(smoothed_rho(0, 10, 0.5, 4.0), 4.0);
        let s = ExitStats::from_counts(FaceCounts { positive: 1000, ..Default::default() }, 1e6).unwrap();
        assert!(s.zero_count && s.rho_hat < 1.0 / 1000.0);
        assert!(ExitStats::from_counts(FaceCounts { timeout: 3, ..Default::default() }, 1.0).is_err());
    }

    #[test]
    fn ladder_indexing() {
        let l = SlabLadder::new(4.0, 1.0, vec![1.0]).unwrap();
        assert_eq!(l.index_of(&[1.99]), 0);
        assert_eq!(l.index_of(&[2.0]), 1);
        assert_eq!(l.index_of(&[-2.0]), 0);
        assert!(l.in_slab(1, &[3.5]) && !l.in_slab(1, &[3.49]));
        assert!(SlabLadder::new(1.0, 1.0, vec![1.0]).is_err());
    }

    #[test]
    fn neighbor_slab_immediate() {
        let e = sample_environment(&EnvSpec::brownian(1), 0).unwrap();
        let l = SlabLadder::new(4.0, 1.0, vec![1.0]).unwrap();
        let mut rng = StreamKey::new(0, 0, 0).rng(0);
        let (s, r) = run_to_neighbor_slab(&e, &[3.6], &l, Some(0), 1e-3, &mut rng, None).unwrap();
        assert_eq!((s, r.exit_time), (1, 0.0));
    }
}
